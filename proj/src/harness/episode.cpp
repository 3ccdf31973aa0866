#include "harness/episode.hpp"

#include <random>

#include "core/errors.hpp"

namespace coplan::harness {

bool success_predicate(const GridTask& task, StateIndex s) { return task.is_success(s); }

EpisodeTrace simulate_episode(const DecPomdpModel& m, const SuccessPredicate& success,
                              const fsc::StochasticFsc& human, robot::RobotAgent& robot,
                              std::uint64_t seed, int horizon) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto sample = [&](std::span<const Outcome> row) {
    double u = unit(rng);
    for (const Outcome& o : row) {
      if (u < o.prob) return o.index;
      u -= o.prob;
    }
    return row.back().index;
  };

  EpisodeTrace trace;
  trace.seed = seed;
  StateIndex s = sample(m.initial_belief.entries());
  int node = human.sample_initial(rng);
  trace.objective = human.node(node).objective;
  // A distinct stream: seeding the robot with `seed` itself would replay
  // the environment's draws and correlate the two.
  robot.reset(rng());
  std::optional<ObsIndex> robot_obs;
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    if (success(s)) {
      trace.terminal = true;
      break;
    }
    StepRecord rec;
    rec.t = t;
    rec.state = s;
    rec.human_node = node;
    rec.human_action = human.act(node, rng);
    rec.robot_action = robot.step(robot_obs);
    const ActionIndex a = m.joint_action(rec.human_action, rec.robot_action);
    rec.reward = m.r(trace.objective, s, a);
    s = sample(m.next_states(s, a));
    const ObsIndex o = sample(m.observations(a, s));
    rec.human_obs = m.human_observation(o);
    rec.robot_obs = m.robot_observation(o);
    node = human.step(node, rec.human_action, rec.human_obs, rng);
    robot_obs = rec.robot_obs;
    trace.cumulative_reward += rec.reward;
    trace.discounted_reward += discount * rec.reward;
    discount *= m.discount;
    trace.steps.push_back(rec);
  }
  if (success(s)) trace.terminal = true;
  trace.final_state = s;
  trace.success = trace.terminal;
  return trace;
}

std::vector<fsc::StochasticFsc> objective_union_sampler(
    const std::vector<std::pair<fsc::StochasticFsc, fsc::StochasticFsc>>& pairs) {
  std::vector<fsc::StochasticFsc> out;
  out.reserve(pairs.size());
  for (const auto& [left, right] : pairs) {
    out.push_back(fsc::union_fsc({left, right}, {0.5, 0.5}));
  }
  return out;
}

json trace_to_json(const EpisodeTrace& t) {
  json steps = json::array();
  for (const StepRecord& r : t.steps) {
    steps.push_back({{"t", r.t},
                     {"s", r.state},
                     {"a_h", r.human_action},
                     {"a_r", r.robot_action},
                     {"o_h", r.human_obs},
                     {"o_r", r.robot_obs},
                     {"n_h", r.human_node},
                     {"reward", r.reward}});
  }
  return {{"seed", t.seed},
          {"objective", t.objective},
          {"steps", std::move(steps)},
          {"final_state", t.final_state},
          {"terminal", t.terminal},
          {"success", t.success},
          {"partial", t.partial},
          {"cumulative_reward", t.cumulative_reward},
          {"discounted_reward", t.discounted_reward}};
}

EpisodeTrace trace_from_json(const json& j) {
  try {
    EpisodeTrace t;
    t.seed = j.at("seed").get<std::uint64_t>();
    t.objective = j.at("objective").get<int>();
    for (const json& r : j.at("steps")) {
      StepRecord rec;
      rec.t = r.at("t").get<int>();
      rec.state = r.at("s").get<StateIndex>();
      rec.human_action = r.at("a_h").get<ActionIndex>();
      rec.robot_action = r.at("a_r").get<ActionIndex>();
      rec.human_obs = r.at("o_h").get<ObsIndex>();
      rec.robot_obs = r.at("o_r").get<ObsIndex>();
      rec.human_node = r.at("n_h").get<int>();
      rec.reward = r.at("reward").get<double>();
      t.steps.push_back(rec);
    }
    t.final_state = j.at("final_state").get<StateIndex>();
    t.terminal = j.at("terminal").get<bool>();
    t.success = j.at("success").get<bool>();
    t.partial = j.value("partial", false);
    t.cumulative_reward = j.at("cumulative_reward").get<double>();
    t.discounted_reward = j.at("discounted_reward").get<double>();
    return t;
  } catch (const json::exception& e) {
    throw ModelError(std::string("trace schema violation: ") + e.what());
  }
}

}  // namespace coplan::harness
