#pragma once

#include <cstdint>
#include <vector>

#include "core/model.hpp"
#include "core/model_io.hpp"

namespace coplan::solver {

struct MctsParams {
  std::size_t simulations = 10000;
  int depth = 30;                 // lookahead steps after the root action
  double exploration_c = -1.0;    // < 0: reward range times horizon length
  std::size_t particles = 1000;   // root particles, resampled per query
  std::uint64_t seed = 0;
};

// Missing keys keep the values of `defaults`.
MctsParams mcts_params_from_json(const json& j, MctsParams defaults = {});
json mcts_params_to_json(const MctsParams& params);

struct QEstimates {
  std::vector<double> q;
  std::vector<std::size_t> visits;
  std::vector<double> std_error;  // infinite for unvisited actions
};

// UCT search over action/observation histories with states sampled from a
// root particle set. The root estimate is R(b,a) plus the discounted mean of
// simulated future returns, so depth 0 gives R(b,a) exactly.
QEstimates mcts_estimate(const PomdpModel& model, const Belief& b,
                         const MctsParams& params);

}  // namespace coplan::solver
