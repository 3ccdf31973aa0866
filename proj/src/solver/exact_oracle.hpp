#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "core/model.hpp"

namespace coplan::solver {

// Finite-horizon expectimax over all action/observation sequences, memoized
// on normalized beliefs. Intended for small test instances.
class ExactOracle {
 public:
  static constexpr double kMaxLeaves = 1e7;

  // Throws InstanceTooLarge when (|A|·|Ω|)^horizon exceeds max_leaves. The
  // memo keeps the work far below the leaf count when beliefs recur, so deep
  // horizons on tiny models may raise the limit explicitly.
  ExactOracle(const PomdpModel& model, int horizon, double max_leaves = kMaxLeaves);

  int horizon() const { return horizon_; }
  double value(const Belief& b) { return value(b, horizon_); }
  std::vector<double> q_values(const Belief& b) { return q_values(b, horizon_); }

  // Values with `steps` decisions to go (0 <= steps <= horizon).
  double value(const Belief& b, int steps);
  std::vector<double> q_values(const Belief& b, int steps);

 private:
  const PomdpModel& model_;
  int horizon_;
  std::vector<std::unordered_map<std::uint64_t, double>> memo_;
};

}  // namespace coplan::solver
