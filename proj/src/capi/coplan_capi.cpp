#include "coplan/coplan.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "core/errors.hpp"
#include "core/grid_task.hpp"
#include "core/model_io.hpp"
#include "fsc/extract.hpp"
#include "fsc/fsc.hpp"
#include "game_server.hpp"
#include "harness/campaign.hpp"
#include "robot/compile.hpp"
#include "robot/policy.hpp"
#include "session/session.hpp"
#include "solver/estimator.hpp"
#include "solver/mcts.hpp"
#include "solver/pbvi.hpp"

using namespace coplan;

struct coplan_model {
  DecPomdpModel model;
};
struct coplan_policy {
  solver::AlphaVectorPolicy policy;
};
struct coplan_fsc {
  fsc::StochasticFsc fsc;
};
struct coplan_robot_pomdp {
  robot::CompiledRobotPomdp compiled;
};
struct coplan_robot_policy {
  std::shared_ptr<const robot::RobotPolicy> policy;
};
struct coplan_executor {
  robot::RobotExecutor executor;
};
struct coplan_server {
  std::unique_ptr<server::GameServer> server;
};

namespace {

thread_local std::string g_last_error;

coplan_status fail(coplan_status s, const char* what) {
  g_last_error = what;
  return s;
}

// Runs f, mapping library exceptions onto status codes.
template <typename F>
coplan_status guarded(F f) {
  try {
    f();
    g_last_error.clear();
    return COPLAN_OK;
  } catch (const InvalidArgument& e) {
    return fail(COPLAN_ERR_INVALID_ARGUMENT, e.what());
  } catch (const ModelError& e) {
    return fail(COPLAN_ERR_MODEL, e.what());
  } catch (const IoError& e) {
    return fail(COPLAN_ERR_IO, e.what());
  } catch (const NotFound& e) {
    return fail(COPLAN_ERR_NOT_FOUND, e.what());
  } catch (const InstanceTooLarge& e) {
    return fail(COPLAN_ERR_INSTANCE_TOO_LARGE, e.what());
  } catch (const ZeroProbabilityObservation& e) {
    return fail(COPLAN_ERR_ZERO_PROBABILITY, e.what());
  } catch (const AllActionsPruned& e) {
    return fail(COPLAN_ERR_ALL_ACTIONS_PRUNED, e.what());
  } catch (const StateError& e) {
    return fail(COPLAN_ERR_STATE, e.what());
  } catch (const json::exception& e) {
    return fail(COPLAN_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(COPLAN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(COPLAN_ERR_INTERNAL, e.what());
  }
}

void require(const void* p, const char* name) {
  if (!p) throw InvalidArgument(std::string(name) + " must not be NULL");
}

json parse_or_empty(const char* text) {
  if (!text || !*text) return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("malformed JSON: ") + e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void check_objective(const DecPomdpModel& m, int objective) {
  if (objective < 1 || objective > static_cast<int>(m.rewards.size())) {
    throw NotFound("objective " + std::to_string(objective) + " not in model");
  }
}

std::unique_ptr<solver::QEstimator> make_estimator(const PomdpModel& mpomdp,
                                                   const coplan_policy* values, const json& p) {
  const std::string kind = p.value("estimator", std::string("pbvi"));
  if (kind == "pbvi") {
    if (!values) throw InvalidArgument("the pbvi estimator needs a value function");
    if (values->policy.num_states != mpomdp.num_states()) {
      throw InvalidArgument("value function does not match the model");
    }
    return std::make_unique<solver::AlphaLookaheadEstimator>(mpomdp, values->policy);
  }
  if (kind == "mcts") {
    return std::make_unique<solver::MctsEstimator>(
        mpomdp, solver::mcts_params_from_json(p.value("mcts", json::object())));
  }
  throw InvalidArgument("unknown estimator: " + kind);
}

}  // namespace

extern "C" {

const char* coplan_last_error(void) { return g_last_error.c_str(); }

const char* coplan_status_name(coplan_status s) {
  switch (s) {
    case COPLAN_OK:
      return "ok";
    case COPLAN_ERR_INVALID_ARGUMENT:
      return "invalid-argument";
    case COPLAN_ERR_MODEL:
      return "model-error";
    case COPLAN_ERR_IO:
      return "io-error";
    case COPLAN_ERR_NOT_FOUND:
      return "not-found";
    case COPLAN_ERR_INSTANCE_TOO_LARGE:
      return "instance-too-large";
    case COPLAN_ERR_ZERO_PROBABILITY:
      return "zero-probability-observation";
    case COPLAN_ERR_ALL_ACTIONS_PRUNED:
      return "all-actions-pruned";
    case COPLAN_ERR_STATE:
      return "state-error";
    case COPLAN_ERR_INTERNAL:
      return "internal-error";
  }
  return "unknown";
}

const char* coplan_version(void) { return "0.1.0"; }

void coplan_string_free(char* s) { std::free(s); }

coplan_status coplan_model_build_grid(const char* config_json, coplan_model** out) {
  return guarded([&] {
    require(out, "out");
    GridTaskConfig config;
    if (config_json && *config_json) config = grid_config_from_json(parse_or_empty(config_json));
    *out = new coplan_model{build_grid_task(config)};
  });
}

coplan_status coplan_model_load(const char* path, coplan_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new coplan_model{load_model(path)};
  });
}

coplan_status coplan_model_save(const coplan_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    save_model(model->model, path);
  });
}

coplan_status coplan_model_info(const coplan_model* model, char** json_out) {
  return guarded([&] {
    require(model, "model");
    require(json_out, "json_out");
    const DecPomdpModel& m = model->model;
    json objectives = json::array();
    for (const RewardTable& r : m.rewards) objectives.push_back({{"id", r.id}, {"name", r.name}});
    const json info = {{"states", m.num_states()},
                       {"joint_actions", m.num_joint_actions()},
                       {"human_actions", m.human.actions.size()},
                       {"robot_actions", m.robot.actions.size()},
                       {"human_observations", m.human.observations.size()},
                       {"robot_observations", m.robot.observations.size()},
                       {"objectives", objectives},
                       {"discount", m.discount}};
    *json_out = dup_string(info.dump());
  });
}

void coplan_model_free(coplan_model* model) { delete model; }

coplan_status coplan_solve_pbvi(const coplan_model* model, int objective, const char* params_json,
                                coplan_policy** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    check_objective(model->model, objective);
    const solver::PbviParams params = solver::pbvi_params_from_json(parse_or_empty(params_json));
    const PomdpModel mpomdp = to_mpomdp(model->model, objective);
    *out = new coplan_policy{solver::pbvi_solve(mpomdp, params).policy};
  });
}

coplan_status coplan_mcts_estimate(const coplan_model* model, int objective,
                                   const char* belief_json, const char* params_json,
                                   char** json_out) {
  return guarded([&] {
    require(model, "model");
    require(json_out, "json_out");
    check_objective(model->model, objective);
    const PomdpModel mpomdp = to_mpomdp(model->model, objective);
    const Belief b = belief_json && *belief_json ? belief_from_json(parse_or_empty(belief_json))
                                                 : mpomdp.initial_belief;
    const auto q = solver::mcts_estimate(
        mpomdp, b, solver::mcts_params_from_json(parse_or_empty(params_json)));
    json se = json::array();
    for (double v : q.std_error) {
      se.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    }
    *json_out = dup_string(json{{"q", q.q}, {"visits", q.visits}, {"std_error", se}}.dump());
  });
}

coplan_status coplan_policy_load(const char* path, coplan_policy** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new coplan_policy{solver::policy_from_json(read_json_file(path))};
  });
}

coplan_status coplan_policy_save(const coplan_policy* policy, const char* path) {
  return guarded([&] {
    require(policy, "policy");
    require(path, "path");
    write_json_file(solver::policy_to_json(policy->policy), path);
  });
}

coplan_status coplan_policy_value(const coplan_policy* policy, const char* belief_json,
                                  double* value, int* action) {
  return guarded([&] {
    require(policy, "policy");
    require(belief_json, "belief_json");
    const auto choice =
        solver::value_of(policy->policy, belief_from_json(parse_or_empty(belief_json)));
    if (value) *value = choice.value;
    if (action) *action = choice.action;
  });
}

size_t coplan_policy_size(const coplan_policy* policy) {
  return policy ? policy->policy.vectors.size() : 0;
}

void coplan_policy_free(coplan_policy* policy) { delete policy; }

coplan_status coplan_fsc_extract(const coplan_model* model, const coplan_policy* values,
                                 int objective, const char* params_json, coplan_fsc** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    check_objective(model->model, objective);
    const json p = parse_or_empty(params_json);
    const fsc::ExtractionParams params = fsc::extraction_params_from_json(p);
    const PomdpModel mpomdp = to_mpomdp(model->model, objective);
    auto est = make_estimator(mpomdp, values, p);
    *out = new coplan_fsc{fsc::extract_stochastic_fsc(*est, model->model, objective, params)};
  });
}

coplan_status coplan_fsc_sample_deterministic(const coplan_model* model,
                                              const coplan_policy* values, int objective,
                                              const char* params_json, uint64_t seed,
                                              coplan_fsc** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    check_objective(model->model, objective);
    const json p = parse_or_empty(params_json);
    const fsc::ExtractionParams params = fsc::extraction_params_from_json(p);
    const PomdpModel mpomdp = to_mpomdp(model->model, objective);
    auto est = make_estimator(mpomdp, values, p);
    *out = new coplan_fsc{
        fsc::sample_deterministic_fsc(*est, model->model, objective, params, seed)};
  });
}

coplan_status coplan_fsc_union(const coplan_fsc* const* fscs, const double* weights, size_t count,
                               coplan_fsc** out) {
  return guarded([&] {
    require(fscs, "fscs");
    require(out, "out");
    if (count == 0) throw InvalidArgument("union of zero controllers");
    std::vector<fsc::StochasticFsc> parts;
    std::vector<double> p;
    for (size_t i = 0; i < count; ++i) {
      require(fscs[i], "fscs[i]");
      parts.push_back(fscs[i]->fsc);
      p.push_back(weights ? weights[i] : 1.0 / static_cast<double>(count));
    }
    *out = new coplan_fsc{fsc::union_fsc(parts, p)};
  });
}

coplan_status coplan_fsc_stats(const coplan_fsc* f, char** json_out) {
  return guarded([&] {
    require(f, "fsc");
    require(json_out, "json_out");
    json initial = json::array();
    for (const Outcome& o : f->fsc.initial()) initial.push_back({{"node", o.index}, {"p", o.prob}});
    std::vector<int> objectives;
    for (const fsc::FscNode& n : f->fsc.nodes()) {
      if (std::find(objectives.begin(), objectives.end(), n.objective) == objectives.end()) {
        objectives.push_back(n.objective);
      }
    }
    const json stats = {{"nodes", f->fsc.num_nodes()},
                        {"depth", f->fsc.depth()},
                        {"actions", f->fsc.num_actions()},
                        {"observations", f->fsc.num_observations()},
                        {"initial", initial},
                        {"objectives", objectives}};
    *json_out = dup_string(stats.dump());
  });
}

coplan_status coplan_fsc_load(const char* path, coplan_fsc** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new coplan_fsc{fsc::load_fsc(path)};
  });
}

coplan_status coplan_fsc_save(const coplan_fsc* f, const char* path) {
  return guarded([&] {
    require(f, "fsc");
    require(path, "path");
    fsc::save_fsc(f->fsc, path);
  });
}

void coplan_fsc_free(coplan_fsc* f) { delete f; }

coplan_status coplan_compile(const coplan_model* model, const coplan_fsc* human_union,
                             size_t state_cap, coplan_robot_pomdp** out) {
  return guarded([&] {
    require(model, "model");
    require(human_union, "human_union");
    require(out, "out");
    *out = new coplan_robot_pomdp{robot::compile_robot_pomdp(
        model->model, human_union->fsc, state_cap ? state_cap : robot::kDefaultStateCap)};
  });
}

size_t coplan_robot_pomdp_states(const coplan_robot_pomdp* pomdp) {
  return pomdp ? pomdp->compiled.states.size() : 0;
}

coplan_status coplan_robot_pomdp_load(const char* path, coplan_robot_pomdp** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new coplan_robot_pomdp{robot::compiled_from_json(read_json_file(path))};
  });
}

coplan_status coplan_robot_pomdp_save(const coplan_robot_pomdp* pomdp, const char* path) {
  return guarded([&] {
    require(pomdp, "pomdp");
    require(path, "path");
    write_json_file(robot::compiled_to_json(pomdp->compiled), path);
  });
}

void coplan_robot_pomdp_free(coplan_robot_pomdp* pomdp) { delete pomdp; }

coplan_status coplan_robot_solve(const coplan_robot_pomdp* pomdp, const char* params_json,
                                 coplan_robot_policy** out) {
  return guarded([&] {
    require(pomdp, "pomdp");
    require(out, "out");
    const solver::PbviParams params = solver::pbvi_params_from_json(parse_or_empty(params_json));
    *out = new coplan_robot_policy{
        std::make_shared<robot::RobotPolicy>(robot::solve_robot(pomdp->compiled, params))};
  });
}

coplan_status coplan_robot_policy_load(const char* path, coplan_robot_policy** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new coplan_robot_policy{
        std::make_shared<robot::RobotPolicy>(robot::load_robot_policy(path))};
  });
}

coplan_status coplan_robot_policy_save(const coplan_robot_policy* policy, const char* path) {
  return guarded([&] {
    require(policy, "policy");
    require(path, "path");
    robot::save_robot_policy(*policy->policy, path);
  });
}

coplan_status coplan_robot_policy_info(const coplan_robot_policy* policy, char** json_out) {
  return guarded([&] {
    require(policy, "policy");
    require(json_out, "json_out");
    const robot::RobotPolicy& p = *policy->policy;
    const json info = {
        {"extended_states", p.compiled.states.size()},
        {"alpha_vectors", p.alphas.vectors.size()},
        {"initial_value", solver::value_of(p.alphas, p.compiled.pomdp.initial_belief).value},
        {"residual", p.alphas.residual}};
    *json_out = dup_string(info.dump());
  });
}

void coplan_robot_policy_free(coplan_robot_policy* policy) { delete policy; }

coplan_status coplan_executor_new(const coplan_robot_policy* policy, const char* recovery,
                                  coplan_executor** out) {
  return guarded([&] {
    require(policy, "policy");
    require(out, "out");
    const robot::Recovery r =
        recovery ? robot::recovery_from_string(recovery) : robot::Recovery::Reset;
    *out = new coplan_executor{robot::RobotExecutor(policy->policy, r)};
  });
}

coplan_status coplan_executor_step(coplan_executor* executor, int has_observation,
                                   int observation, int* action) {
  return guarded([&] {
    require(executor, "executor");
    require(action, "action");
    *action = executor->executor.step(has_observation ? std::optional<ObsIndex>(observation)
                                                      : std::nullopt);
  });
}

coplan_status coplan_executor_reset(coplan_executor* executor) {
  return guarded([&] {
    require(executor, "executor");
    executor->executor.reset();
  });
}

void coplan_executor_free(coplan_executor* executor) { delete executor; }

coplan_status coplan_bench_run(const char* spec_json, const char* out_dir,
                               char** summary_json_out) {
  return guarded([&] {
    require(spec_json, "spec_json");
    const harness::CampaignSpec spec =
        harness::campaign_spec_from_json(parse_or_empty(spec_json));
    const harness::CampaignReport report = harness::run_campaign(spec);
    if (out_dir && *out_dir) harness::write_campaign_outputs(report, out_dir);
    if (summary_json_out) *summary_json_out = dup_string(harness::report_to_json(report).dump());
  });
}

coplan_status coplan_server_start(const char* policies_dir, const char* address, unsigned port,
                                  const char* static_dir, coplan_server** out) {
  return guarded([&] {
    require(policies_dir, "policies_dir");
    require(out, "out");
    if (port > 65535) throw InvalidArgument("port out of range");
    auto registry = session::PolicyRegistry::load_directory(policies_dir);
    if (registry->ids().empty()) throw NotFound(std::string("no robot policies in ") + policies_dir);
    server::ServerOptions options;
    if (address && *address) options.address = address;
    options.port = static_cast<unsigned short>(port);
    if (static_dir) options.static_dir = static_dir;
    auto srv = std::make_unique<server::GameServer>(
        std::make_shared<session::SessionManager>(registry), options);
    srv->start();
    *out = new coplan_server{std::move(srv)};
  });
}

unsigned coplan_server_port(const coplan_server* server) {
  return server ? server->server->port() : 0;
}

void coplan_server_stop(coplan_server* server) {
  if (server) server->server->stop();
}

void coplan_server_free(coplan_server* server) { delete server; }

}  // extern "C"
