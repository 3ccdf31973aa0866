#pragma once

#include <span>
#include <string>
#include <vector>

#include "core/belief.hpp"
#include "core/sparse.hpp"

namespace coplan {

inline constexpr double kKernelTolerance = 1e-9;

// Single-agent tabular POMDP. Transition rows are indexed s * |A| + a,
// observation rows a * |S| + s', rewards s * |A| + a.
struct PomdpModel {
  std::vector<std::string> state_names;
  std::vector<std::string> action_names;
  std::vector<std::string> observation_names;
  SparseKernel transition;
  SparseKernel observation;
  std::vector<double> reward;
  Belief initial_belief;
  double discount = 0.95;

  std::size_t num_states() const { return state_names.size(); }
  std::size_t num_actions() const { return action_names.size(); }
  std::size_t num_observations() const { return observation_names.size(); }

  std::span<const Outcome> next_states(StateIndex s, ActionIndex a) const {
    return transition.row(static_cast<std::size_t>(s) * num_actions() + a);
  }
  std::span<const Outcome> observations(ActionIndex a, StateIndex s2) const {
    return observation.row(static_cast<std::size_t>(a) * num_states() + s2);
  }
  double r(StateIndex s, ActionIndex a) const {
    return reward[static_cast<std::size_t>(s) * num_actions() + a];
  }
  double expected_reward(const Belief& b, ActionIndex a) const;

  // Throws ModelError naming the first violated invariant.
  void validate() const;

  friend bool operator==(const PomdpModel&, const PomdpModel&) = default;
};

struct AgentSpec {
  std::string name;
  std::vector<std::string> actions;
  std::vector<std::string> observations;

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

struct RewardTable {
  int id = 1;
  std::string name;
  std::vector<double> values;  // s * |A| + a over joint actions

  friend bool operator==(const RewardTable&, const RewardTable&) = default;
};

// Two-agent (human, robot) Dec-POMDP. Joint action a = a_H * |A_R| + a_R and
// joint observation o = o_H * |Ω_R| + o_R.
struct DecPomdpModel {
  std::vector<std::string> state_names;
  AgentSpec human;
  AgentSpec robot;
  SparseKernel transition;
  SparseKernel observation;
  std::vector<RewardTable> rewards;
  Belief initial_belief;
  double discount = 0.95;

  std::size_t num_states() const { return state_names.size(); }
  std::size_t num_human_actions() const { return human.actions.size(); }
  std::size_t num_robot_actions() const { return robot.actions.size(); }
  std::size_t num_joint_actions() const {
    return num_human_actions() * num_robot_actions();
  }
  std::size_t num_human_observations() const { return human.observations.size(); }
  std::size_t num_robot_observations() const { return robot.observations.size(); }
  std::size_t num_joint_observations() const {
    return num_human_observations() * num_robot_observations();
  }

  ActionIndex joint_action(ActionIndex a_h, ActionIndex a_r) const {
    return a_h * static_cast<ActionIndex>(num_robot_actions()) + a_r;
  }
  ActionIndex human_action(ActionIndex a) const {
    return a / static_cast<ActionIndex>(num_robot_actions());
  }
  ActionIndex robot_action(ActionIndex a) const {
    return a % static_cast<ActionIndex>(num_robot_actions());
  }
  ObsIndex joint_observation(ObsIndex o_h, ObsIndex o_r) const {
    return o_h * static_cast<ObsIndex>(num_robot_observations()) + o_r;
  }
  ObsIndex human_observation(ObsIndex o) const {
    return o / static_cast<ObsIndex>(num_robot_observations());
  }
  ObsIndex robot_observation(ObsIndex o) const {
    return o % static_cast<ObsIndex>(num_robot_observations());
  }

  std::span<const Outcome> next_states(StateIndex s, ActionIndex a) const {
    return transition.row(static_cast<std::size_t>(s) * num_joint_actions() + a);
  }
  std::span<const Outcome> observations(ActionIndex a, StateIndex s2) const {
    return observation.row(static_cast<std::size_t>(a) * num_states() + s2);
  }

  // Throws NotFound for an unknown objective id.
  const RewardTable& reward_table(int objective_id) const;
  double r(int objective_id, StateIndex s, ActionIndex a) const;

  void validate() const;

  friend bool operator==(const DecPomdpModel&, const DecPomdpModel&) = default;
};

// Centralized relaxation: joint actions and joint observations become the
// single agent's, with the reward of the given objective.
PomdpModel to_mpomdp(const DecPomdpModel& model, int objective_id);

// Pr(o | b, a).
double observation_probability(const PomdpModel& model, const Belief& b,
                               ActionIndex a, ObsIndex o);

// Standard Bayes filter b'(s') ∝ Σ_s T(s,a,s') O(a,s',o) b(s). Throws
// ZeroProbabilityObservation when Pr(o | b, a) = 0.
Belief belief_update(const PomdpModel& model, const Belief& b, ActionIndex a,
                     ObsIndex o);

// All successors of b under action a, one per observation with positive
// probability, sorted by observation.
struct BeliefSuccessor {
  ObsIndex observation;
  double probability;
  Belief belief;
};
std::vector<BeliefSuccessor> belief_successors(const PomdpModel& model,
                                               const Belief& b, ActionIndex a);

}  // namespace coplan
