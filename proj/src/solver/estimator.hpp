#pragma once

#include <memory>
#include <vector>

#include "core/model.hpp"
#include "solver/alpha_policy.hpp"
#include "solver/exact_oracle.hpp"
#include "solver/mcts.hpp"

namespace coplan::solver {

// Q(b, a) / V(b) provider for FSC extraction; implementations may be
// stateful (caches, random streams) and are not thread-safe. They keep a
// reference to the model, which must outlive them.
class QEstimator {
 public:
  virtual ~QEstimator() = default;
  virtual std::vector<double> q_values(const Belief& b) = 0;
  double value(const Belief& b);
};

// One-step lookahead over an alpha-vector value function:
// Q(b,a) = R(b,a) + γ Σ_o max_α Σ_s' Pr(s', o | b, a) α(s').
class AlphaLookaheadEstimator : public QEstimator {
 public:
  AlphaLookaheadEstimator(const PomdpModel& model, AlphaVectorPolicy policy);
  std::vector<double> q_values(const Belief& b) override;
  const AlphaVectorPolicy& policy() const { return policy_; }

 private:
  const PomdpModel& model_;
  AlphaVectorPolicy policy_;
  struct Entry {
    ObsIndex obs;
    StateIndex state;
    double weight;
  };
  std::vector<Entry> scratch_;
};

class MctsEstimator : public QEstimator {
 public:
  MctsEstimator(const PomdpModel& model, MctsParams params);
  std::vector<double> q_values(const Belief& b) override;

 private:
  const PomdpModel& model_;
  MctsParams params_;
  std::uint64_t queries_ = 0;
};

class ExactOracleEstimator : public QEstimator {
 public:
  ExactOracleEstimator(const PomdpModel& model, int horizon);
  std::vector<double> q_values(const Belief& b) override;

 private:
  ExactOracle oracle_;
};

}  // namespace coplan::solver
