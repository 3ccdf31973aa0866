#include "solver/exact_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/errors.hpp"

namespace coplan::solver {

ExactOracle::ExactOracle(const PomdpModel& model, int horizon, double max_leaves)
    : model_(model), horizon_(horizon) {
  if (horizon < 0) throw InvalidArgument("horizon must be >= 0");
  const double branching =
      static_cast<double>(model.num_actions()) * static_cast<double>(model.num_observations());
  if (horizon > 0 && horizon * std::log10(std::max(branching, 1.0)) > std::log10(max_leaves)) {
    throw InstanceTooLarge("exact oracle: (|A|·|Ω|)^h exceeds the leaf limit");
  }
  memo_.resize(static_cast<std::size_t>(horizon) + 1);
}

double ExactOracle::value(const Belief& b, int steps) {
  if (steps < 0 || steps > horizon_) throw InvalidArgument("steps outside [0, horizon]");
  if (steps == 0) return 0.0;
  const std::uint64_t key = b.fingerprint();
  auto& memo = memo_[steps];
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  const std::vector<double> q = q_values(b, steps);
  const double v = *std::max_element(q.begin(), q.end());
  memo.emplace(key, v);
  return v;
}

std::vector<double> ExactOracle::q_values(const Belief& b, int steps) {
  if (steps < 0 || steps > horizon_) throw InvalidArgument("steps outside [0, horizon]");
  std::vector<double> q(model_.num_actions(), 0.0);
  if (steps == 0) return q;
  for (std::size_t a = 0; a < q.size(); ++a) {
    const ActionIndex act = static_cast<ActionIndex>(a);
    double v = model_.expected_reward(b, act);
    if (steps > 1) {
      for (const auto& succ : belief_successors(model_, b, act)) {
        v += model_.discount * succ.probability * value(succ.belief, steps - 1);
      }
    }
    q[a] = v;
  }
  return q;
}

}  // namespace coplan::solver
