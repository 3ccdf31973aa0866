// coplan command-line front end. Uses only the C API.
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pthread.h>

#include "CLI11.hpp"
#include "coplan/coplan.h"
#include "json.hpp"

using json = nlohmann::json;

namespace {

// Exit codes: 0 ok, 1 usage, 2 library error.
struct CliFailure {
  coplan_status status;
  std::string message;
};

void check(coplan_status s) {
  if (s != COPLAN_OK) throw CliFailure{s, coplan_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  coplan_string_free(s);
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliFailure{COPLAN_ERR_IO, "cannot read " + path};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Inline JSON object or @file.
std::string json_arg(const std::string& value) {
  if (value.empty()) return "";
  if (value[0] == '@') return read_text(value.substr(1));
  return value;
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  ~Handle() { Free(p); }
};

using Model = Handle<coplan_model, coplan_model_free>;
using Policy = Handle<coplan_policy, coplan_policy_free>;
using Fsc = Handle<coplan_fsc, coplan_fsc_free>;
using RobotPomdp = Handle<coplan_robot_pomdp, coplan_robot_pomdp_free>;
using RobotPolicy = Handle<coplan_robot_policy, coplan_robot_policy_free>;

Model load_or_build(const std::string& path) {
  Model m;
  if (path.empty()) {
    check(coplan_model_build_grid(nullptr, &m.p));
  } else {
    check(coplan_model_load(path.c_str(), &m.p));
  }
  return m;
}

std::string merged_params(const std::string& params, const json& overrides) {
  json j = params.empty() ? json::object() : json::parse(params);
  for (auto it = overrides.begin(); it != overrides.end(); ++it) j[it.key()] = it.value();
  return j.dump();
}

int serve(const std::string& policies, const std::string& address, int port,
          const std::string& static_dir) {
  // Block SIGINT/SIGTERM before the server threads start so they inherit it.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  if (port < 0) {
    port = 8080;
    if (const char* env = std::getenv("COPLAN_PORT")) {
      try {
        const int p = std::stoi(env);
        if (p >= 0 && p <= 65535) port = p;
      } catch (const std::exception&) {
      }
    }
  }
  coplan_server* server = nullptr;
  check(coplan_server_start(policies.c_str(), address.c_str(), static_cast<unsigned>(port),
                            static_dir.empty() ? nullptr : static_dir.c_str(), &server));
  std::printf("listening on %s:%u\n", address.c_str(), coplan_server_port(server));
  std::fflush(stdout);
  int sig = 0;
  sigwait(&set, &sig);
  coplan_server_stop(server);
  coplan_server_free(server);
  std::printf("stopped\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative human-robot planning toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(coplan_version()));

  // model
  auto* model_cmd = app.add_subcommand("model", "Build or inspect Dec-POMDP models");
  model_cmd->require_subcommand(1);
  std::string grid_config, model_out, model_file;
  auto* build = model_cmd->add_subcommand("build-grid", "Build the grid repair task");
  build->add_option("--config", grid_config, "Layout JSON (inline or @file)");
  build->add_option("--out", model_out, "Output model file")->required();
  auto* validate = model_cmd->add_subcommand("validate", "Load, validate and describe a model");
  validate->add_option("file", model_file)->required();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Solve the MPOMDP of one objective");
  std::string solve_model, solve_method = "pbvi", solve_params, solve_out, solve_belief;
  int solve_objective = 1;
  std::uint64_t solve_seed = 0;
  bool solve_seed_set = false;
  solve_cmd->add_option("--model", solve_model, "Model file (default: grid task)");
  solve_cmd->add_option("--method", solve_method)->check(CLI::IsMember({"pbvi", "mcts"}));
  solve_cmd->add_option("--objective", solve_objective);
  auto* seed_opt = solve_cmd->add_option("--seed", solve_seed);
  solve_cmd->add_option("--params", solve_params, "Solver JSON (inline or @file)");
  solve_cmd->add_option("--belief", solve_belief, "mcts: belief JSON [[state, p], ...]");
  solve_cmd->add_option("--out", solve_out, "pbvi: output policy file");

  // fsc
  auto* fsc_cmd = app.add_subcommand("fsc", "Human finite-state controllers");
  fsc_cmd->require_subcommand(1);
  std::string fsc_model, fsc_values, fsc_params, fsc_out;
  int fsc_objective = 1;
  std::uint64_t fsc_seed = 0;
  std::optional<double> fsc_t, fsc_eps, fsc_threshold;
  std::optional<std::size_t> fsc_nmax;
  std::string fsc_estimator;
  auto add_extract_opts = [&](CLI::App* c) {
    c->add_option("--model", fsc_model, "Model file (default: grid task)");
    c->add_option("--values", fsc_values, "MPOMDP policy for the pbvi estimator");
    c->add_option("--objective", fsc_objective);
    c->add_option("--params", fsc_params, "Extraction JSON (inline or @file)");
    c->add_option("--T", fsc_t, "Softmax temperature");
    c->add_option("--nmax", fsc_nmax, "Maximum number of nodes");
    c->add_option("--eps", fsc_eps, "L1 belief merge threshold");
    c->add_option("--threshold", fsc_threshold, "Human action pruning threshold");
    c->add_option("--estimator", fsc_estimator, "pbvi (needs --values) or mcts")
        ->check(CLI::IsMember({"pbvi", "mcts"}));
    c->add_option("--out", fsc_out)->required();
  };
  auto* extract = fsc_cmd->add_subcommand("extract", "Extract a stochastic controller");
  add_extract_opts(extract);
  auto* sample = fsc_cmd->add_subcommand("sample-det", "Sample a deterministic controller");
  add_extract_opts(sample);
  sample->add_option("--seed", fsc_seed);
  extract->add_option("--seed", fsc_seed, "mcts estimator seed");
  std::vector<std::string> union_inputs;
  std::vector<double> union_weights;
  auto* uni = fsc_cmd->add_subcommand("union", "Disjoint union of controllers");
  uni->add_option("inputs", union_inputs)->required();
  uni->add_option("--p,--weights", union_weights, "Mixture weights (default uniform)");
  uni->add_option("--out", fsc_out)->required();
  std::string stats_file;
  auto* stats = fsc_cmd->add_subcommand("stats", "Describe a controller");
  stats->add_option("file", stats_file)->required();

  // compile
  auto* compile_cmd = app.add_subcommand("compile", "Compile the robot POMDP");
  std::string compile_model, compile_union, compile_out;
  std::size_t state_cap = 0;
  compile_cmd->add_option("--model", compile_model, "Model file (default: grid task)");
  compile_cmd->add_option("--union", compile_union, "Human controller union")->required();
  compile_cmd->add_option("--state-cap", state_cap);
  compile_cmd->add_option("--out", compile_out)->required();

  // robot
  auto* robot_cmd = app.add_subcommand("robot", "Robot policies");
  robot_cmd->require_subcommand(1);
  std::string robot_pomdp, robot_params, robot_out, robot_info_file;
  auto* robot_solve = robot_cmd->add_subcommand("solve", "Solve a compiled robot POMDP");
  robot_solve->add_option("--pomdp", robot_pomdp)->required();
  robot_solve->add_option("--params", robot_params, "PBVI JSON (inline or @file)");
  robot_solve->add_option("--out", robot_out)->required();
  auto* robot_info = robot_cmd->add_subcommand("info", "Describe a robot policy");
  robot_info->add_option("file", robot_info_file)->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run a synthetic-human campaign");
  std::string bench_spec, bench_out;
  bench_cmd->add_option("--spec", bench_spec, "Campaign JSON (inline or @file)");
  bench_cmd->add_option("--out", bench_out, "Output directory")->required();

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve the live game");
  std::string serve_policies, serve_address = "127.0.0.1", serve_static;
  int serve_port = -1;
  serve_cmd->add_option("--policies", serve_policies, "Directory of robot policies")->required();
  serve_cmd->add_option("--address", serve_address);
  serve_cmd->add_option("--port", serve_port, "Default: COPLAN_PORT, then 8080")
      ->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--static", serve_static, "Directory of UI files");

  CLI11_PARSE(app, argc, argv);
  solve_seed_set = seed_opt->count() > 0;

  try {
    if (*build) {
      Model m;
      const std::string cfg = json_arg(grid_config);
      check(coplan_model_build_grid(cfg.empty() ? nullptr : cfg.c_str(), &m.p));
      check(coplan_model_save(m.p, model_out.c_str()));
      char* info = nullptr;
      check(coplan_model_info(m.p, &info));
      std::cout << take(info) << "\n";
    } else if (*validate) {
      Model m = load_or_build(model_file);
      char* info = nullptr;
      check(coplan_model_info(m.p, &info));
      std::cout << take(info) << "\n";
    } else if (*solve_cmd) {
      Model m = load_or_build(solve_model);
      json overrides = json::object();
      if (solve_seed_set) overrides["seed"] = solve_seed;
      const std::string params = merged_params(json_arg(solve_params), overrides);
      if (solve_method == "pbvi") {
        if (solve_out.empty()) throw CliFailure{COPLAN_ERR_INVALID_ARGUMENT, "--out is required"};
        Policy p;
        check(coplan_solve_pbvi(m.p, solve_objective, params.c_str(), &p.p));
        check(coplan_policy_save(p.p, solve_out.c_str()));
        std::cout << json{{"alpha_vectors", coplan_policy_size(p.p)}}.dump() << "\n";
      } else {
        const std::string belief = json_arg(solve_belief);
        char* out = nullptr;
        check(coplan_mcts_estimate(m.p, solve_objective, belief.empty() ? nullptr : belief.c_str(),
                                   params.c_str(), &out));
        const std::string text = take(out);
        if (!solve_out.empty()) std::ofstream(solve_out) << text << "\n";
        std::cout << text << "\n";
      }
    } else if (*extract || *sample) {
      Model m = load_or_build(fsc_model);
      Policy values;
      if (!fsc_values.empty()) check(coplan_policy_load(fsc_values.c_str(), &values.p));
      json overrides = json::object();
      if (fsc_t) overrides["temperature"] = *fsc_t;
      if (fsc_nmax) overrides["max_nodes"] = *fsc_nmax;
      if (fsc_eps) overrides["epsilon"] = *fsc_eps;
      if (fsc_threshold) overrides["action_threshold"] = *fsc_threshold;
      if (!fsc_estimator.empty()) overrides["estimator"] = fsc_estimator;
      json merged = json::parse(merged_params(json_arg(fsc_params), overrides));
      if (merged.value("estimator", std::string("pbvi")) == "mcts" && *extract) {
        if (!merged.contains("mcts")) merged["mcts"] = json::object();
        if (!merged["mcts"].contains("seed")) merged["mcts"]["seed"] = fsc_seed;
      }
      const std::string params = merged.dump();
      Fsc f;
      if (*extract) {
        check(coplan_fsc_extract(m.p, values.p, fsc_objective, params.c_str(), &f.p));
      } else {
        check(coplan_fsc_sample_deterministic(m.p, values.p, fsc_objective, params.c_str(),
                                              fsc_seed, &f.p));
      }
      check(coplan_fsc_save(f.p, fsc_out.c_str()));
      char* s = nullptr;
      check(coplan_fsc_stats(f.p, &s));
      std::cout << take(s) << "\n";
    } else if (*uni) {
      std::vector<Fsc> parts(union_inputs.size());
      std::vector<const coplan_fsc*> ptrs;
      for (std::size_t i = 0; i < union_inputs.size(); ++i) {
        check(coplan_fsc_load(union_inputs[i].c_str(), &parts[i].p));
        ptrs.push_back(parts[i].p);
      }
      if (!union_weights.empty() && union_weights.size() != ptrs.size()) {
        throw CliFailure{COPLAN_ERR_INVALID_ARGUMENT, "one weight per input is required"};
      }
      Fsc u;
      check(coplan_fsc_union(ptrs.data(), union_weights.empty() ? nullptr : union_weights.data(),
                             ptrs.size(), &u.p));
      check(coplan_fsc_save(u.p, fsc_out.c_str()));
      char* s = nullptr;
      check(coplan_fsc_stats(u.p, &s));
      std::cout << take(s) << "\n";
    } else if (*stats) {
      Fsc f;
      check(coplan_fsc_load(stats_file.c_str(), &f.p));
      char* s = nullptr;
      check(coplan_fsc_stats(f.p, &s));
      std::cout << take(s) << "\n";
    } else if (*compile_cmd) {
      Model m = load_or_build(compile_model);
      Fsc u;
      check(coplan_fsc_load(compile_union.c_str(), &u.p));
      RobotPomdp r;
      check(coplan_compile(m.p, u.p, state_cap, &r.p));
      check(coplan_robot_pomdp_save(r.p, compile_out.c_str()));
      std::cout << json{{"extended_states", coplan_robot_pomdp_states(r.p)}}.dump() << "\n";
    } else if (*robot_solve) {
      RobotPomdp r;
      check(coplan_robot_pomdp_load(robot_pomdp.c_str(), &r.p));
      const std::string params = json_arg(robot_params);
      RobotPolicy p;
      check(coplan_robot_solve(r.p, params.c_str(), &p.p));
      check(coplan_robot_policy_save(p.p, robot_out.c_str()));
      char* s = nullptr;
      check(coplan_robot_policy_info(p.p, &s));
      std::cout << take(s) << "\n";
    } else if (*robot_info) {
      RobotPolicy p;
      check(coplan_robot_policy_load(robot_info_file.c_str(), &p.p));
      char* s = nullptr;
      check(coplan_robot_policy_info(p.p, &s));
      std::cout << take(s) << "\n";
    } else if (*bench_cmd) {
      const std::string spec = bench_spec.empty() ? std::string("{}") : json_arg(bench_spec);
      char* summary = nullptr;
      check(coplan_bench_run(spec.c_str(), bench_out.c_str(), &summary));
      const json report = json::parse(take(summary));
      for (const auto& c : report.at("cells")) {
        std::printf("%-16s %-14s success %.3f  value %9.3f +- %.3f  (n=%d)\n",
                    c.at("robot").get<std::string>().c_str(),
                    c.at("family").get<std::string>().c_str(), c.at("success_rate").get<double>(),
                    c.at("mean_value").get<double>(), c.at("std_error").get<double>(),
                    c.at("episodes").get<int>());
      }
      std::printf("outputs written to %s\n", bench_out.c_str());
    } else if (*serve_cmd) {
      return serve(serve_policies, serve_address, serve_port, serve_static);
    }
  } catch (const CliFailure& e) {
    std::fprintf(stderr, "error (%s): %s\n", coplan_status_name(e.status), e.message.c_str());
    return 2;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error (invalid-argument): %s\n", e.what());
    return 2;
  }
  return 0;
}
