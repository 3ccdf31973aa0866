#pragma once

#include <cstdint>

#include "core/model.hpp"
#include "fsc/fsc.hpp"
#include "solver/estimator.hpp"

namespace coplan::fsc {

struct ExtractionParams {
  double temperature = 0.3;
  std::size_t max_nodes = 600;
  double epsilon = 1e-3;  // L1 merge threshold
  double action_threshold = 0.1;

  // Throws InvalidArgument when out of range.
  void validate() const;
};

// Missing keys keep the values of `defaults`; the result is validated.
ExtractionParams extraction_params_from_json(const json& j, ExtractionParams defaults = {});
json extraction_params_to_json(const ExtractionParams& params);

// Builds a human controller from an MPOMDP estimator of the given
// objective. Nodes are expanded in order of w · V(b) (V cached at node
// creation, ties to the lowest id); a successor belief within epsilon of an
// existing node, or any successor once max_nodes is reached, is linked to
// the closest node. Impossible or pruned (a_H, o_H) pairs become self-loops.
StochasticFsc extract_stochastic_fsc(solver::QEstimator& estimator, const DecPomdpModel& model,
                                     int objective_id, const ExtractionParams& params);

// As above, but each node plays one human action drawn from its pruned
// marginal at creation, and only that action is expanded.
StochasticFsc sample_deterministic_fsc(solver::QEstimator& estimator,
                                       const DecPomdpModel& model, int objective_id,
                                       const ExtractionParams& params, std::uint64_t seed);

}  // namespace coplan::fsc
