#pragma once

#include <cstdint>
#include <optional>

#include "core/model.hpp"
#include "fsc/fsc.hpp"

namespace coplan::fsc {

struct PolicyValueOptions {
  int objective_id = 1;
  int horizon = 30;
  double discount = 1.0;
  // Exact propagation gives up once the (s, n_H, n_R) support grows past
  // this and falls back to Monte-Carlo.
  std::size_t max_support = 500000;
  std::size_t episodes = 10000;
  std::uint64_t seed = 0;
  bool force_monte_carlo = false;
};

struct PolicyValue {
  double value = 0.0;
  double std_error = 0.0;  // 0 for exact results
  bool exact = true;
};

// Expected cumulative reward Σ_{t<horizon} discount^t r_t of a human
// controller and a robot controller acting together from b0.
PolicyValue fsc_policy_value(const DecPomdpModel& model, const StochasticFsc& human,
                             const StochasticFsc& robot, const PolicyValueOptions& options);

// Single-agent form: the controller plays the POMDP alone.
PolicyValue fsc_policy_value(const PomdpModel& model, const StochasticFsc& controller,
                             PolicyValueOptions options);

// The POMDP as a two-agent problem whose robot has one action and one
// observation.
DecPomdpModel as_single_agent(const PomdpModel& model);

}  // namespace coplan::fsc
