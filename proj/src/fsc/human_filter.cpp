#include "fsc/human_filter.hpp"

#include <algorithm>

#include "core/errors.hpp"

namespace coplan::fsc {

namespace {

struct Mass {
  ObsIndex obs;
  StateIndex state;
  double p;
};

std::vector<Mass> successor_mass(const DecPomdpModel& m, const Belief& b, ActionIndex a_h,
                                 const std::vector<double>& sigma_r) {
  if (sigma_r.size() != m.num_robot_actions()) {
    throw InvalidArgument("robot rule size does not match the robot actions");
  }
  if (a_h < 0 || static_cast<std::size_t>(a_h) >= m.num_human_actions()) {
    throw InvalidArgument("human action out of range");
  }
  std::vector<Mass> mass;
  for (std::size_t ar = 0; ar < sigma_r.size(); ++ar) {
    if (sigma_r[ar] <= 0.0) continue;
    const ActionIndex a = m.joint_action(a_h, static_cast<ActionIndex>(ar));
    for (const auto& e : b) {
      for (const Outcome& t : m.next_states(e.index, a)) {
        for (const Outcome& z : m.observations(a, t.index)) {
          mass.push_back({m.human_observation(z.index), t.index,
                          e.prob * t.prob * z.prob * sigma_r[ar]});
        }
      }
    }
  }
  std::sort(mass.begin(), mass.end(), [](const Mass& x, const Mass& y) {
    return x.obs != y.obs ? x.obs < y.obs : x.state < y.state;
  });
  return mass;
}

}  // namespace

std::vector<HumanSuccessor> human_successors(const DecPomdpModel& model, const Belief& b,
                                             ActionIndex a_h,
                                             const std::vector<double>& sigma_r) {
  const std::vector<Mass> mass = successor_mass(model, b, a_h, sigma_r);
  std::vector<HumanSuccessor> out;
  std::vector<Outcome> entries;
  for (std::size_t lo = 0; lo < mass.size();) {
    std::size_t hi = lo;
    double total = 0.0;
    entries.clear();
    while (hi < mass.size() && mass[hi].obs == mass[lo].obs) {
      entries.push_back({mass[hi].state, mass[hi].p});
      total += mass[hi].p;
      ++hi;
    }
    if (total > 0.0) {
      out.push_back({mass[lo].obs, total, Belief::from_unnormalized(entries)});
    }
    lo = hi;
  }
  return out;
}

Belief human_belief_update(const DecPomdpModel& model, const Belief& b, ActionIndex a_h,
                           ObsIndex o_h, const std::vector<double>& sigma_r) {
  std::vector<Outcome> entries;
  for (const Mass& x : successor_mass(model, b, a_h, sigma_r)) {
    if (x.obs == o_h) entries.push_back({x.state, x.p});
  }
  return Belief::from_unnormalized(std::move(entries));
}

double history_probability(const DecPomdpModel& model, const Belief& b, ActionIndex a_h,
                           ObsIndex o_h, const std::vector<double>& sigma_h,
                           const std::vector<double>& sigma_r) {
  if (sigma_h.size() != model.num_human_actions()) {
    throw InvalidArgument("human rule size does not match the human actions");
  }
  if (sigma_h[a_h] <= 0.0) return 0.0;
  double total = 0.0;
  for (const Mass& x : successor_mass(model, b, a_h, sigma_r)) {
    if (x.obs == o_h) total += x.p;
  }
  return sigma_h[a_h] * total;
}

}  // namespace coplan::fsc
