#include "fsc/evaluate.hpp"

#include <cmath>
#include <random>
#include <unordered_map>

#include "core/errors.hpp"

namespace coplan::fsc {

namespace {

struct Key {
  StateIndex s;
  int nh;
  int nr;
};

std::optional<double> exact_value(const DecPomdpModel& m, const StochasticFsc& human,
                                  const StochasticFsc& robot, const PolicyValueOptions& opt) {
  const std::uint64_t NH = human.num_nodes();
  const std::uint64_t NR = robot.num_nodes();
  auto encode = [&](StateIndex s, int nh, int nr) {
    return (static_cast<std::uint64_t>(s) * NH + static_cast<std::uint64_t>(nh)) * NR +
           static_cast<std::uint64_t>(nr);
  };
  std::vector<std::pair<Key, double>> current;
  for (const auto& e : m.initial_belief) {
    for (const Outcome& h : human.initial()) {
      for (const Outcome& r : robot.initial()) {
        current.push_back({{e.index, h.index, r.index}, e.prob * h.prob * r.prob});
      }
    }
  }
  double value = 0.0;
  double discount = 1.0;
  std::unordered_map<std::uint64_t, std::size_t> index;
  for (int t = 0; t < opt.horizon; ++t) {
    std::vector<std::pair<Key, double>> next;
    index.clear();
    double reward = 0.0;
    for (const auto& [k, p] : current) {
      const auto& psi_h = human.node(k.nh).action_dist;
      const auto& psi_r = robot.node(k.nr).action_dist;
      for (std::size_t ah = 0; ah < psi_h.size(); ++ah) {
        if (psi_h[ah] <= 0.0) continue;
        for (std::size_t ar = 0; ar < psi_r.size(); ++ar) {
          if (psi_r[ar] <= 0.0) continue;
          const double pa = p * psi_h[ah] * psi_r[ar];
          const ActionIndex a =
              m.joint_action(static_cast<ActionIndex>(ah), static_cast<ActionIndex>(ar));
          reward += pa * m.r(opt.objective_id, k.s, a);
          if (t + 1 == opt.horizon) continue;
          for (const Outcome& tr : m.next_states(k.s, a)) {
            for (const Outcome& z : m.observations(a, tr.index)) {
              const ObsIndex oh = m.human_observation(z.index);
              const ObsIndex orr = m.robot_observation(z.index);
              for (const Outcome& h2 :
                   human.successors(k.nh, static_cast<ActionIndex>(ah), oh)) {
                for (const Outcome& r2 :
                     robot.successors(k.nr, static_cast<ActionIndex>(ar), orr)) {
                  const double q = pa * tr.prob * z.prob * h2.prob * r2.prob;
                  const std::uint64_t key = encode(tr.index, h2.index, r2.index);
                  auto [it, fresh] = index.emplace(key, next.size());
                  if (fresh) {
                    next.push_back({{tr.index, h2.index, r2.index}, q});
                  } else {
                    next[it->second].second += q;
                  }
                }
              }
            }
          }
        }
      }
    }
    value += discount * reward;
    discount *= opt.discount;
    if (next.size() > opt.max_support) return std::nullopt;
    current.swap(next);
  }
  return value;
}

PolicyValue monte_carlo_value(const DecPomdpModel& m, const StochasticFsc& human,
                              const StochasticFsc& robot, const PolicyValueOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto sample = [&](std::span<const Outcome> row) {
    double u = unit(rng);
    for (const Outcome& o : row) {
      if (u < o.prob) return o.index;
      u -= o.prob;
    }
    return row.back().index;
  };
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t ep = 0; ep < opt.episodes; ++ep) {
    StateIndex s = sample(m.initial_belief.entries());
    int nh = human.sample_initial(rng);
    int nr = robot.sample_initial(rng);
    double ret = 0.0;
    double discount = 1.0;
    for (int t = 0; t < opt.horizon; ++t) {
      const ActionIndex ah = human.act(nh, rng);
      const ActionIndex ar = robot.act(nr, rng);
      const ActionIndex a = m.joint_action(ah, ar);
      ret += discount * m.r(opt.objective_id, s, a);
      discount *= opt.discount;
      s = sample(m.next_states(s, a));
      const ObsIndex o = sample(m.observations(a, s));
      nh = human.step(nh, ah, m.human_observation(o), rng);
      nr = robot.step(nr, ar, m.robot_observation(o), rng);
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  PolicyValue out;
  out.exact = false;
  if (opt.episodes == 0) return out;
  const double n = static_cast<double>(opt.episodes);
  out.value = sum / n;
  const double var = opt.episodes > 1 ? std::max(0.0, (sum_sq - n * out.value * out.value) / (n - 1)) : 0.0;
  out.std_error = std::sqrt(var / n);
  return out;
}

}  // namespace

PolicyValue fsc_policy_value(const DecPomdpModel& model, const StochasticFsc& human,
                             const StochasticFsc& robot, const PolicyValueOptions& options) {
  if (human.num_actions() != model.num_human_actions() ||
      human.num_observations() != model.num_human_observations() ||
      robot.num_actions() != model.num_robot_actions() ||
      robot.num_observations() != model.num_robot_observations()) {
    throw InvalidArgument("controller does not match the model's actions or observations");
  }
  if (options.horizon < 0) throw InvalidArgument("horizon must be >= 0");
  model.reward_table(options.objective_id);
  if (!options.force_monte_carlo) {
    if (auto v = exact_value(model, human, robot, options)) return {*v, 0.0, true};
  }
  return monte_carlo_value(model, human, robot, options);
}

DecPomdpModel as_single_agent(const PomdpModel& p) {
  DecPomdpModel m;
  m.state_names = p.state_names;
  m.human = {"agent", p.action_names, p.observation_names};
  m.robot = {"idle", {"none"}, {"none"}};
  m.transition = p.transition;
  m.observation = p.observation;
  m.rewards = {{1, "reward", p.reward}};
  m.initial_belief = p.initial_belief;
  m.discount = p.discount;
  return m;
}

PolicyValue fsc_policy_value(const PomdpModel& model, const StochasticFsc& controller,
                             PolicyValueOptions options) {
  const DecPomdpModel dec = as_single_agent(model);
  options.objective_id = 1;
  return fsc_policy_value(dec, controller, constant_fsc(1, 1, 0), options);
}

}  // namespace coplan::fsc
