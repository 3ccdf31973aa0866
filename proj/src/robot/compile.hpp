#pragma once

#include <cstdint>
#include <vector>

#include "core/model.hpp"
#include "fsc/fsc.hpp"

namespace coplan::robot {

inline constexpr std::size_t kDefaultStateCap = 2000000;

// ⟨world state, human node, robot observation stored in the state⟩. The
// stored observation equals the number of robot observations for the
// distinguished initial observation.
struct ExtendedState {
  StateIndex state;
  int node;
  ObsIndex robot_obs;

  friend bool operator==(const ExtendedState&, const ExtendedState&) = default;
};

struct CompiledRobotPomdp {
  PomdpModel pomdp;  // actions: robot actions; observations: Ω_R plus "initial"
  std::vector<ExtendedState> states;
  ObsIndex initial_observation = 0;
};

// Forward closure from b0 × β. T_e marginalizes the human action with ψ and
// the human observation through η; O_e reveals the stored observation; r_e
// uses each node's objective. Throws InstanceTooLarge past the state cap.
CompiledRobotPomdp compile_robot_pomdp(const DecPomdpModel& model,
                                       const fsc::StochasticFsc& human_union,
                                       std::size_t state_cap = kDefaultStateCap);

}  // namespace coplan::robot
