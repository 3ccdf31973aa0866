#include "robot/compile.hpp"

#include <algorithm>
#include <unordered_map>

#include "core/errors.hpp"

namespace coplan::robot {

CompiledRobotPomdp compile_robot_pomdp(const DecPomdpModel& m,
                                       const fsc::StochasticFsc& human,
                                       std::size_t state_cap) {
  if (human.num_actions() != m.num_human_actions() ||
      human.num_observations() != m.num_human_observations()) {
    throw InvalidArgument("human controller does not match the model");
  }
  human.validate();
  for (const fsc::FscNode& n : human.nodes()) m.reward_table(n.objective);

  const std::size_t AR = m.num_robot_actions();
  const std::size_t AH = m.num_human_actions();
  const std::uint64_t num_obs = m.num_robot_observations() + 1;
  const std::uint64_t num_nodes = human.num_nodes();
  const ObsIndex initial_obs = static_cast<ObsIndex>(m.num_robot_observations());

  CompiledRobotPomdp out;
  out.initial_observation = initial_obs;
  std::unordered_map<std::uint64_t, StateIndex> index;
  auto key = [&](StateIndex s, int n, ObsIndex o) {
    return (static_cast<std::uint64_t>(s) * num_nodes + static_cast<std::uint64_t>(n)) * num_obs +
           static_cast<std::uint64_t>(o);
  };
  auto intern = [&](StateIndex s, int n, ObsIndex o) {
    auto [it, fresh] = index.emplace(key(s, n, o), static_cast<StateIndex>(out.states.size()));
    if (fresh) {
      if (out.states.size() >= state_cap) {
        throw InstanceTooLarge("robot POMDP exceeds " + std::to_string(state_cap) +
                               " extended states; lower N_max");
      }
      out.states.push_back({s, n, o});
    }
    return it->second;
  };

  std::vector<Outcome> b0;
  for (const auto& e : m.initial_belief) {
    for (const Outcome& h : human.initial()) {
      b0.push_back({intern(e.index, h.index, initial_obs), e.prob * h.prob});
    }
  }

  PomdpModel& p = out.pomdp;
  std::vector<Outcome> row;
  for (std::size_t i = 0; i < out.states.size(); ++i) {
    const ExtendedState e = out.states[i];
    const auto& psi = human.node(e.node).action_dist;
    const RewardTable& rewards = m.reward_table(human.node(e.node).objective);
    for (std::size_t ar = 0; ar < AR; ++ar) {
      row.clear();
      double r = 0.0;
      for (std::size_t ah = 0; ah < AH; ++ah) {
        if (psi[ah] <= 0.0) continue;
        const ActionIndex a = m.joint_action(static_cast<ActionIndex>(ah),
                                             static_cast<ActionIndex>(ar));
        r += psi[ah] * rewards.values[static_cast<std::size_t>(e.state) * m.num_joint_actions() + a];
        for (const Outcome& t : m.next_states(e.state, a)) {
          for (const Outcome& z : m.observations(a, t.index)) {
            const ObsIndex oh = m.human_observation(z.index);
            const ObsIndex orr = m.robot_observation(z.index);
            for (const Outcome& n2 : human.successors(e.node, static_cast<ActionIndex>(ah), oh)) {
              row.push_back({intern(t.index, n2.index, orr), psi[ah] * t.prob * z.prob * n2.prob});
            }
          }
        }
      }
      merge_outcomes(row);
      p.transition.append_row(row);
      p.reward.push_back(r);
    }
  }

  const std::size_t S = out.states.size();
  p.state_names.reserve(S);
  for (const ExtendedState& e : out.states) {
    p.state_names.push_back(m.state_names[e.state] + " n" + std::to_string(e.node) + " o" +
                            std::to_string(e.robot_obs));
  }
  p.action_names = m.robot.actions;
  p.observation_names = m.robot.observations;
  p.observation_names.push_back("initial");
  p.observation.reserve(AR * S, AR * S);
  for (std::size_t a = 0; a < AR; ++a) {
    for (const ExtendedState& e : out.states) p.observation.append_single(e.robot_obs);
  }
  p.initial_belief = Belief::from_unnormalized(std::move(b0));
  p.discount = m.discount;
  return out;
}

}  // namespace coplan::robot
