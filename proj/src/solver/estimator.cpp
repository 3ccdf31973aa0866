#include "solver/estimator.hpp"

#include <algorithm>
#include <limits>

#include "core/errors.hpp"

namespace coplan::solver {

double QEstimator::value(const Belief& b) {
  const std::vector<double> q = q_values(b);
  return *std::max_element(q.begin(), q.end());
}

AlphaLookaheadEstimator::AlphaLookaheadEstimator(const PomdpModel& model,
                                                 AlphaVectorPolicy policy)
    : model_(model), policy_(std::move(policy)) {
  if (policy_.vectors.empty()) throw InvalidArgument("empty alpha-vector policy");
  if (policy_.num_states != model.num_states()) {
    throw InvalidArgument("policy dimension does not match the model");
  }
}

std::vector<double> AlphaLookaheadEstimator::q_values(const Belief& b) {
  const auto& vectors = policy_.vectors;
  std::vector<double> q(model_.num_actions());
  for (std::size_t a = 0; a < q.size(); ++a) {
    const ActionIndex act = static_cast<ActionIndex>(a);
    scratch_.clear();
    double v = 0.0;
    for (const auto& e : b) {
      v += e.prob * model_.r(e.index, act);
      for (const Outcome& t : model_.next_states(e.index, act)) {
        for (const Outcome& z : model_.observations(act, t.index)) {
          scratch_.push_back({z.index, t.index, e.prob * t.prob * z.prob});
        }
      }
    }
    std::sort(scratch_.begin(), scratch_.end(), [](const Entry& x, const Entry& y) {
      return x.obs != y.obs ? x.obs < y.obs : x.state < y.state;
    });
    double future = 0.0;
    for (std::size_t lo = 0; lo < scratch_.size();) {
      std::size_t hi = lo;
      while (hi < scratch_.size() && scratch_[hi].obs == scratch_[lo].obs) ++hi;
      double best = -std::numeric_limits<double>::infinity();
      for (const AlphaVector& alpha : vectors) {
        double x = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
          x += scratch_[k].weight * alpha.values[scratch_[k].state];
        }
        best = std::max(best, x);
      }
      future += best;
      lo = hi;
    }
    q[a] = v + model_.discount * future;
  }
  return q;
}

MctsEstimator::MctsEstimator(const PomdpModel& model, MctsParams params)
    : model_(model), params_(params) {}

std::vector<double> MctsEstimator::q_values(const Belief& b) {
  MctsParams p = params_;
  // Distinct but reproducible stream per query.
  p.seed = params_.seed + 0x9e3779b97f4a7c15ULL * ++queries_;
  return mcts_estimate(model_, b, p).q;
}

ExactOracleEstimator::ExactOracleEstimator(const PomdpModel& model, int horizon)
    : oracle_(model, horizon) {}

std::vector<double> ExactOracleEstimator::q_values(const Belief& b) {
  return oracle_.q_values(b);
}

}  // namespace coplan::solver
