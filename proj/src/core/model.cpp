#include "core/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace coplan {

namespace {

void check_kernels(const SparseKernel& transition, const SparseKernel& observation,
                   std::size_t num_states, std::size_t num_actions,
                   std::size_t num_observations) {
  if (transition.num_rows() != num_states * num_actions) {
    throw ModelError("transition table has wrong number of rows");
  }
  if (observation.num_rows() != num_states * num_actions) {
    throw ModelError("observation table has wrong number of rows");
  }
  if (auto bad = transition.find_non_stochastic_row(num_states, kKernelTolerance)) {
    std::ostringstream msg;
    msg << "transition row " << bad->row << " (s=" << bad->row / num_actions
        << ", a=" << bad->row % num_actions << ") sums to " << bad->sum;
    throw ModelError(msg.str());
  }
  if (auto bad =
          observation.find_non_stochastic_row(num_observations, kKernelTolerance)) {
    std::ostringstream msg;
    msg << "observation row " << bad->row << " (a=" << bad->row / num_states
        << ", s'=" << bad->row % num_states << ") sums to " << bad->sum;
    throw ModelError(msg.str());
  }
}

void check_initial(const Belief& b0, std::size_t num_states) {
  double total = 0.0;
  for (const auto& e : b0) {
    if (e.index < 0 || static_cast<std::size_t>(e.index) >= num_states ||
        e.prob < 0.0 || e.prob > 1.0) {
      throw ModelError("initial belief entry out of range");
    }
    total += e.prob;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "initial belief sums to " << total;
    throw ModelError(msg.str());
  }
}

void check_discount(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ModelError("discount must lie in [0, 1)");
  }
}

}  // namespace

double PomdpModel::expected_reward(const Belief& b, ActionIndex a) const {
  double v = 0.0;
  for (const auto& e : b) v += e.prob * r(e.index, a);
  return v;
}

void PomdpModel::validate() const {
  if (num_states() == 0 || num_actions() == 0 || num_observations() == 0) {
    throw ModelError("model has an empty state, action or observation set");
  }
  check_kernels(transition, observation, num_states(), num_actions(),
                num_observations());
  if (reward.size() != num_states() * num_actions()) {
    throw ModelError("reward table has wrong size");
  }
  check_initial(initial_belief, num_states());
  check_discount(discount);
}

const RewardTable& DecPomdpModel::reward_table(int objective_id) const {
  for (const RewardTable& t : rewards) {
    if (t.id == objective_id) return t;
  }
  throw NotFound("unknown objective id " + std::to_string(objective_id));
}

double DecPomdpModel::r(int objective_id, StateIndex s, ActionIndex a) const {
  return reward_table(objective_id)
      .values[static_cast<std::size_t>(s) * num_joint_actions() + a];
}

void DecPomdpModel::validate() const {
  if (num_states() == 0 || num_joint_actions() == 0 ||
      num_joint_observations() == 0) {
    throw ModelError("model has an empty state, action or observation set");
  }
  check_kernels(transition, observation, num_states(), num_joint_actions(),
                num_joint_observations());
  if (rewards.empty()) throw ModelError("model needs at least one reward table");
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (rewards[i].values.size() != num_states() * num_joint_actions()) {
      throw ModelError("reward table " + std::to_string(rewards[i].id) +
                       " has wrong size");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (rewards[j].id == rewards[i].id) {
        throw ModelError("duplicate reward id " + std::to_string(rewards[i].id));
      }
    }
  }
  check_initial(initial_belief, num_states());
  check_discount(discount);
}

PomdpModel to_mpomdp(const DecPomdpModel& model, int objective_id) {
  const RewardTable& table = model.reward_table(objective_id);
  PomdpModel m;
  m.state_names = model.state_names;
  m.action_names.reserve(model.num_joint_actions());
  for (const auto& ah : model.human.actions) {
    for (const auto& ar : model.robot.actions) m.action_names.push_back(ah + "|" + ar);
  }
  m.observation_names.reserve(model.num_joint_observations());
  for (const auto& oh : model.human.observations) {
    for (const auto& orr : model.robot.observations) {
      m.observation_names.push_back(oh + "|" + orr);
    }
  }
  m.transition = model.transition;
  m.observation = model.observation;
  m.reward = table.values;
  m.initial_belief = model.initial_belief;
  m.discount = model.discount;
  return m;
}

namespace {

// Unnormalized successor mass per (observation, s'), sorted by observation.
struct ObsMass {
  ObsIndex o;
  StateIndex s2;
  double p;
};

std::vector<ObsMass> joint_successor_mass(const PomdpModel& model, const Belief& b,
                                          ActionIndex a) {
  std::vector<ObsMass> mass;
  for (const auto& e : b) {
    for (const Outcome& t : model.next_states(e.index, a)) {
      for (const Outcome& z : model.observations(a, t.index)) {
        mass.push_back({z.index, t.index, e.prob * t.prob * z.prob});
      }
    }
  }
  std::sort(mass.begin(), mass.end(), [](const ObsMass& x, const ObsMass& y) {
    return x.o != y.o ? x.o < y.o : x.s2 < y.s2;
  });
  return mass;
}

}  // namespace

double observation_probability(const PomdpModel& model, const Belief& b,
                               ActionIndex a, ObsIndex o) {
  double p = 0.0;
  for (const auto& e : b) {
    for (const Outcome& t : model.next_states(e.index, a)) {
      for (const Outcome& z : model.observations(a, t.index)) {
        if (z.index == o) p += e.prob * t.prob * z.prob;
      }
    }
  }
  return p;
}

Belief belief_update(const PomdpModel& model, const Belief& b, ActionIndex a,
                     ObsIndex o) {
  std::vector<Belief::Entry> next;
  for (const auto& e : b) {
    for (const Outcome& t : model.next_states(e.index, a)) {
      for (const Outcome& z : model.observations(a, t.index)) {
        if (z.index == o) next.push_back({t.index, e.prob * t.prob * z.prob});
      }
    }
  }
  if (next.empty()) {
    throw ZeroProbabilityObservation("observation " + std::to_string(o) +
                                     " has zero probability after action " +
                                     std::to_string(a));
  }
  return Belief::from_unnormalized(std::move(next));
}

std::vector<BeliefSuccessor> belief_successors(const PomdpModel& model,
                                               const Belief& b, ActionIndex a) {
  std::vector<ObsMass> mass = joint_successor_mass(model, b, a);
  std::vector<BeliefSuccessor> out;
  for (std::size_t i = 0; i < mass.size();) {
    std::size_t j = i;
    std::vector<Belief::Entry> entries;
    double total = 0.0;
    for (; j < mass.size() && mass[j].o == mass[i].o; ++j) {
      entries.push_back({mass[j].s2, mass[j].p});
      total += mass[j].p;
    }
    if (total > 0.0) {
      out.push_back({mass[i].o, total, Belief::from_unnormalized(std::move(entries))});
    }
    i = j;
  }
  return out;
}

}  // namespace coplan
