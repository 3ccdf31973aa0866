#include "robot/policy.hpp"

#include "core/errors.hpp"

namespace coplan::robot {

RobotPolicy solve_robot(CompiledRobotPomdp compiled, const solver::PbviParams& params) {
  RobotPolicy out;
  out.alphas = solver::pbvi_solve(compiled.pomdp, params).policy;
  out.compiled = std::move(compiled);
  return out;
}

json compiled_to_json(const CompiledRobotPomdp& c) {
  json j;
  j["version"] = kModelSchemaVersion;
  j["pomdp"] = pomdp_to_json(c.pomdp);
  json states = json::array();
  for (const ExtendedState& e : c.states) states.push_back({e.state, e.node, e.robot_obs});
  j["extended_states"] = std::move(states);
  j["initial_observation"] = c.initial_observation;
  return j;
}

CompiledRobotPomdp compiled_from_json(const json& j) {
  try {
    CompiledRobotPomdp c;
    c.pomdp = pomdp_from_json(j.at("pomdp"));
    for (const json& e : j.at("extended_states")) {
      c.states.push_back({e.at(0).get<StateIndex>(), e.at(1).get<int>(), e.at(2).get<ObsIndex>()});
    }
    c.initial_observation = j.at("initial_observation").get<ObsIndex>();
    if (c.states.size() != c.pomdp.num_states()) {
      throw ModelError("extended state map does not match the POMDP");
    }
    return c;
  } catch (const json::exception& e) {
    throw ModelError(std::string("compiled robot POMDP schema violation: ") + e.what());
  }
}

json robot_policy_to_json(const RobotPolicy& p) {
  json j = compiled_to_json(p.compiled);
  j["policy"] = solver::policy_to_json(p.alphas);
  return j;
}

RobotPolicy robot_policy_from_json(const json& j) {
  RobotPolicy p;
  p.compiled = compiled_from_json(j);
  try {
    p.alphas = solver::policy_from_json(j.at("policy"));
  } catch (const json::exception& e) {
    throw ModelError(std::string("robot policy schema violation: ") + e.what());
  }
  if (p.alphas.num_states != p.compiled.pomdp.num_states()) {
    throw ModelError("robot policy dimensions are inconsistent");
  }
  return p;
}

void save_robot_policy(const RobotPolicy& policy, const std::string& path) {
  write_json_file(robot_policy_to_json(policy), path);
}

RobotPolicy load_robot_policy(const std::string& path) {
  return robot_policy_from_json(read_json_file(path));
}

Recovery recovery_from_string(const std::string& name) {
  if (name == "reset") return Recovery::Reset;
  if (name == "none") return Recovery::None;
  throw InvalidArgument("unknown recovery strategy: " + name);
}

const char* recovery_name(Recovery r) { return r == Recovery::Reset ? "reset" : "none"; }

RobotExecutor::RobotExecutor(std::shared_ptr<const RobotPolicy> policy, Recovery recovery)
    : policy_(std::move(policy)), recovery_(recovery) {
  if (!policy_) throw InvalidArgument("null robot policy");
  reset();
}

void RobotExecutor::reset(std::uint64_t) {
  belief_ = policy_->compiled.pomdp.initial_belief;
  last_action_.reset();
  steps_ = 0;
  events_.clear();
}

ActionIndex RobotExecutor::step(std::optional<ObsIndex> robot_obs) {
  const PomdpModel& p = policy_->compiled.pomdp;
  const ObsIndex o = robot_obs.value_or(policy_->compiled.initial_observation);
  if (o < 0 || static_cast<std::size_t>(o) >= p.num_observations()) {
    throw InvalidArgument("robot observation out of range");
  }
  const auto& states = policy_->compiled.states;
  if (!last_action_) {
    // Before any action: condition the initial belief on the observation.
    std::vector<Outcome> kept;
    for (const auto& e : belief_) {
      if (states[e.index].robot_obs == o) kept.push_back(e);
    }
    if (!kept.empty()) belief_ = Belief::from_unnormalized(std::move(kept));
  } else {
    try {
      belief_ = belief_update(p, belief_, *last_action_, o);
    } catch (const ZeroProbabilityObservation&) {
      std::vector<Outcome> kept;
      for (const auto& e : belief_) {
        if (states[e.index].robot_obs == o) kept.push_back(e);
      }
      if (recovery_ == Recovery::None) {
        events_.push_back({steps_, o, "ignored"});
      } else if (!kept.empty()) {
        belief_ = Belief::from_unnormalized(std::move(kept));
        events_.push_back({steps_, o, "observation-only"});
      } else {
        std::vector<StateIndex> matching;
        for (std::size_t i = 0; i < states.size(); ++i) {
          if (states[i].robot_obs == o) matching.push_back(static_cast<StateIndex>(i));
        }
        if (matching.empty()) {
          // The observation never occurs in the compiled model; keep acting.
          events_.push_back({steps_, o, "ignored"});
        } else {
          belief_ = Belief::uniform_over(std::move(matching));
          events_.push_back({steps_, o, "uniform-reset"});
        }
      }
    }
  }
  ++steps_;
  last_action_ = solver::value_of(policy_->alphas, belief_).action;
  return *last_action_;
}

std::vector<double> RobotExecutor::parent_posterior(const fsc::StochasticFsc& human_union) const {
  std::vector<double> out;
  for (const auto& e : belief_) {
    const int parent = human_union.node(policy_->compiled.states[e.index].node).parent;
    if (out.size() <= static_cast<std::size_t>(parent)) out.resize(parent + 1, 0.0);
    out[parent] += e.prob;
  }
  return out;
}

FscRobot::FscRobot(fsc::StochasticFsc controller) : fsc_(std::move(controller)) {
  fsc_.validate();
}

void FscRobot::reset(std::uint64_t seed) {
  rng_.seed(seed);
  node_ = fsc_.sample_initial(rng_);
}

ActionIndex FscRobot::step(std::optional<ObsIndex> robot_obs) {
  if (robot_obs) node_ = fsc_.step(node_, last_action_, *robot_obs, rng_);
  last_action_ = fsc_.act(node_, rng_);
  return last_action_;
}

}  // namespace coplan::robot
