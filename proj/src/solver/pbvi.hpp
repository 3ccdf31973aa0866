#pragma once

#include <cstdint>

#include "core/model.hpp"
#include "core/model_io.hpp"
#include "solver/alpha_policy.hpp"

namespace coplan::solver {

enum class BackupSchedule {
  // Randomized backups that stop once every point has improved.
  Perseus,
  // One backup per belief point per iteration.
  Synchronous,
};

struct PbviParams {
  std::size_t belief_points = 2000;
  std::size_t iterations = 500;  // value-iteration sweeps per expansion round
  double epsilon = 1e-2;         // stop when no point improves by more
  std::uint64_t seed = 0;
  BackupSchedule schedule = BackupSchedule::Perseus;
  // Breadth-first points collected from b0 before any trajectory expansion;
  // 0 means belief_points.
  std::size_t breadth_first_points = 0;
  // Rounds of epsilon-greedy trajectory expansion after the first solve.
  std::size_t expansion_rounds = 0;
  std::size_t expansion_trajectories = 50;
  std::size_t expansion_depth = 30;
  double exploration = 0.1;
  double time_limit_seconds = 0.0;  // 0: no limit
};

struct PbviResult {
  AlphaVectorPolicy policy;
  double residual = 0.0;  // max Bellman residual over the belief set
  std::size_t iterations = 0;
  std::size_t belief_points = 0;
  bool converged = false;
};

// Point-based value iteration from a blind-policy lower bound. Throws
// InvalidArgument on non-positive budgets; an exhausted budget returns the
// best policy so far with its residual.
PbviResult pbvi_solve(const PomdpModel& model, const PbviParams& params);

// Missing keys keep the values of `defaults`; schedule is "perseus" or
// "synchronous".
PbviParams pbvi_params_from_json(const json& j, PbviParams defaults = {});
json pbvi_params_to_json(const PbviParams& params);

}  // namespace coplan::solver
