#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "core/grid_task.hpp"
#include "fsc/fsc.hpp"
#include "robot/policy.hpp"

namespace coplan::harness {

struct StepRecord {
  int t = 0;
  StateIndex state = 0;  // state before the joint action
  ActionIndex human_action = 0;
  ActionIndex robot_action = 0;
  ObsIndex human_obs = 0;
  ObsIndex robot_obs = 0;
  int human_node = 0;
  double reward = 0.0;
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  int objective = 1;
  std::vector<StepRecord> steps;
  StateIndex final_state = 0;
  bool terminal = false;  // reached an absorbing success state
  bool success = false;
  bool partial = false;  // exported before the episode finished
  double cumulative_reward = 0.0;  // undiscounted, truncated at the horizon
  double discounted_reward = 0.0;
};

using SuccessPredicate = std::function<bool(StateIndex)>;

// All devices good.
bool success_predicate(const GridTask& task, StateIndex s);

// Runs the human controller against the robot agent. The reward channel is
// the objective of the human's initial node. Stops at success or horizon.
EpisodeTrace simulate_episode(const DecPomdpModel& model, const SuccessPredicate& success,
                              const fsc::StochasticFsc& human, robot::RobotAgent& robot,
                              std::uint64_t seed, int horizon = 30);

// Union of each (left, right) pair with P = (0.5, 0.5).
std::vector<fsc::StochasticFsc> objective_union_sampler(
    const std::vector<std::pair<fsc::StochasticFsc, fsc::StochasticFsc>>& pairs);

json trace_to_json(const EpisodeTrace& trace);
EpisodeTrace trace_from_json(const json& j);

}  // namespace coplan::harness
