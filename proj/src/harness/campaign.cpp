#include "harness/campaign.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "core/errors.hpp"
#include "fsc/extract.hpp"
#include "robot/compile.hpp"
#include "robot/policy.hpp"
#include "solver/estimator.hpp"

namespace coplan::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  return splitmix(splitmix(splitmix(splitmix(base) ^ a) ^ b) ^ c);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string default_name(const RobustConfig& c) {
  std::ostringstream os;
  os << "robust(T=" << c.temperature << ",N=" << c.max_nodes << ")";
  return os.str();
}

// Runs job(i) for i in [0, n) on a small pool; each job writes its own slot.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct Robot {
  std::string name;
  std::string row;  // report row; best responses share one row
  std::shared_ptr<const robot::RobotPolicy> policy;
};

}  // namespace

CampaignSpec campaign_spec_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("campaign spec must be a JSON object");
  CampaignSpec s;
  try {
    if (j.contains("grid")) s.grid = grid_config_from_json(j.at("grid"));
    s.seed = j.value("seed", s.seed);
    if (j.contains("mpomdp_solver")) {
      s.mpomdp_solver = solver::pbvi_params_from_json(j.at("mpomdp_solver"), s.mpomdp_solver);
    }
    s.estimator = j.value("estimator", s.estimator);
    if (s.estimator != "pbvi" && s.estimator != "mcts") {
      throw InvalidArgument("unknown estimator: " + s.estimator);
    }
    if (j.contains("mcts")) s.mcts = solver::mcts_params_from_json(j.at("mcts"), s.mcts);
    if (j.contains("robot_solver")) {
      s.robot_solver = solver::pbvi_params_from_json(j.at("robot_solver"), s.robot_solver);
    }
    s.epsilon = j.value("epsilon", s.epsilon);
    s.action_threshold = j.value("action_threshold", s.action_threshold);
    if (j.contains("robust")) {
      for (const json& r : j.at("robust")) {
        RobustConfig c;
        c.temperature = r.value("temperature", c.temperature);
        c.max_nodes = r.value("max_nodes", c.max_nodes);
        if (r.contains("policy")) c.policy_file = r.at("policy").get<std::string>();
        c.name = r.value("name", default_name(c));
        s.robust.push_back(std::move(c));
      }
    }
    if (j.contains("humans")) {
      const json& h = j.at("humans");
      s.human_pairs = h.value("pairs", s.human_pairs);
      s.human_temperature = h.value("temperature", s.human_temperature);
      s.human_max_nodes = h.value("max_nodes", s.human_max_nodes);
    }
    s.best_response = j.value("best_response", s.best_response);
    if (j.contains("recovery")) {
      s.recovery = robot::recovery_from_string(j.at("recovery").get<std::string>());
    }
    s.episodes_per_human = j.value("episodes_per_human", s.episodes_per_human);
    s.horizon = j.value("horizon", s.horizon);
    s.threads = j.value("threads", s.threads);
    s.keep_traces = j.value("keep_traces", s.keep_traces);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad campaign spec: ") + e.what());
  }
  if (s.horizon < 0) throw InvalidArgument("horizon must be non-negative");
  return s;
}

json campaign_spec_to_json(const CampaignSpec& s) {
  json robust = json::array();
  for (const RobustConfig& c : s.robust) {
    json r = {{"name", c.name}, {"temperature", c.temperature}, {"max_nodes", c.max_nodes}};
    if (c.policy_file) r["policy"] = *c.policy_file;
    robust.push_back(std::move(r));
  }
  return {{"grid", grid_config_to_json(s.grid)},
          {"seed", s.seed},
          {"estimator", s.estimator},
          {"mpomdp_solver", solver::pbvi_params_to_json(s.mpomdp_solver)},
          {"mcts", solver::mcts_params_to_json(s.mcts)},
          {"robot_solver", solver::pbvi_params_to_json(s.robot_solver)},
          {"epsilon", s.epsilon},
          {"action_threshold", s.action_threshold},
          {"robust", std::move(robust)},
          {"humans",
           {{"pairs", s.human_pairs},
            {"temperature", s.human_temperature},
            {"max_nodes", s.human_max_nodes}}},
          {"best_response", s.best_response},
          {"recovery", robot::recovery_name(s.recovery)},
          {"episodes_per_human", s.episodes_per_human},
          {"horizon", s.horizon},
          {"threads", s.threads},
          {"keep_traces", s.keep_traces}};
}

const CellResult* CampaignReport::find(const std::string& robot,
                                       const std::string& family) const {
  for (const CellResult& c : cells) {
    if (c.robot == robot && c.family == family) return &c;
  }
  return nullptr;
}

CellResult summarize(const std::string& robot, const std::string& family,
                     const std::vector<EpisodeTrace>& episodes) {
  CellResult c;
  c.robot = robot;
  c.family = family;
  c.episodes = episodes.size();
  if (episodes.empty()) return c;
  double sum = 0.0, disc = 0.0;
  for (const EpisodeTrace& t : episodes) {
    sum += t.cumulative_reward;
    disc += t.discounted_reward;
    c.successes += t.success ? 1 : 0;
  }
  const double n = static_cast<double>(episodes.size());
  c.mean_value = sum / n;
  c.mean_discounted = disc / n;
  c.success_rate = static_cast<double>(c.successes) / n;
  if (episodes.size() > 1) {
    double ss = 0.0;
    for (const EpisodeTrace& t : episodes) {
      ss += (t.cumulative_reward - c.mean_value) * (t.cumulative_reward - c.mean_value);
    }
    c.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return c;
}

CampaignReport run_campaign(const CampaignSpec& spec) {
  const auto start = Clock::now();
  CampaignReport report;
  GridTask task(spec.grid);
  const DecPomdpModel& model = task.model();
  const int objectives = static_cast<int>(model.rewards.size());

  fsc::ExtractionParams base;
  base.epsilon = spec.epsilon;
  base.action_threshold = spec.action_threshold;
  base.validate();

  // Shared front end: MPOMDP per objective and its value function.
  auto t0 = Clock::now();
  std::vector<PomdpModel> mpomdps;
  for (int i = 1; i <= objectives; ++i) mpomdps.push_back(to_mpomdp(model, i));
  const double conversion_s = seconds_since(t0);
  t0 = Clock::now();
  std::vector<solver::AlphaVectorPolicy> values;
  if (spec.estimator == "pbvi") {
    for (const PomdpModel& m : mpomdps) {
      values.push_back(solver::pbvi_solve(m, spec.mpomdp_solver).policy);
    }
  }
  const double estimator_s = seconds_since(t0);

  auto extract = [&](int obj, double temperature, std::size_t max_nodes,
                     std::optional<std::uint64_t> seed) {
    std::unique_ptr<solver::QEstimator> owned;
    if (spec.estimator == "pbvi") {
      owned = std::make_unique<solver::AlphaLookaheadEstimator>(mpomdps[obj - 1], values[obj - 1]);
    } else {
      solver::MctsParams m = spec.mcts;
      m.seed = derive_seed(spec.mcts.seed, 3, static_cast<std::uint64_t>(obj), seed.value_or(0));
      owned = std::make_unique<solver::MctsEstimator>(mpomdps[obj - 1], m);
    }
    solver::QEstimator& est = *owned;
    fsc::ExtractionParams p = base;
    p.temperature = temperature;
    p.max_nodes = max_nodes;
    p.validate();
    return seed ? fsc::sample_deterministic_fsc(est, model, obj, p, *seed)
                : fsc::extract_stochastic_fsc(est, model, obj, p);
  };
  const std::vector<double> uniform(objectives, 1.0 / objectives);

  std::vector<Robot> robots;
  for (std::size_t r = 0; r < spec.robust.size(); ++r) {
    const RobustConfig& c = spec.robust[r];
    if (c.policy_file) {
      if (!std::filesystem::exists(*c.policy_file)) {
        throw IoError("missing robot policy artifact: " + *c.policy_file);
      }
      auto pol = std::make_shared<robot::RobotPolicy>(robot::load_robot_policy(*c.policy_file));
      robots.push_back({c.name, c.name, pol});
      continue;
    }
    PolicySummary summary;
    summary.robot = c.name;
    t0 = Clock::now();
    std::vector<fsc::StochasticFsc> fscs;
    for (int i = 1; i <= objectives; ++i) {
      fscs.push_back(extract(i, c.temperature, c.max_nodes, std::nullopt));
      summary.fsc_nodes.push_back(fscs.back().num_nodes());
      summary.fsc_depths.push_back(fscs.back().depth());
    }
    const double extraction_s = estimator_s + seconds_since(t0);
    t0 = Clock::now();
    robot::CompiledRobotPomdp compiled =
        robot::compile_robot_pomdp(model, fsc::union_fsc(fscs, uniform));
    const double compile_s = seconds_since(t0);
    t0 = Clock::now();
    auto pol = std::make_shared<robot::RobotPolicy>(
        robot::solve_robot(std::move(compiled), spec.robot_solver));
    const double solve_s = seconds_since(t0);
    summary.extended_states = pol->compiled.states.size();
    summary.alpha_vectors = pol->alphas.vectors.size();
    summary.initial_value = solver::value_of(pol->alphas, pol->compiled.pomdp.initial_belief).value;
    summary.residual = pol->alphas.residual;
    report.policies.push_back(summary);
    report.timings.push_back({c.name, kStageConversion, conversion_s});
    report.timings.push_back({c.name, kStageExtraction, extraction_s});
    report.timings.push_back({c.name, kStageCompile, compile_s});
    report.timings.push_back({c.name, kStageSolve, solve_s});
    robots.push_back({c.name, c.name, pol});
  }

  // Synthetic humans: tuple k holds one deterministic FSC per objective.
  t0 = Clock::now();
  std::vector<std::vector<fsc::StochasticFsc>> tuples(spec.human_pairs);
  for (std::size_t k = 0; k < spec.human_pairs; ++k) {
    for (int i = 1; i <= objectives; ++i) {
      tuples[k].push_back(extract(i, spec.human_temperature, spec.human_max_nodes,
                                  derive_seed(spec.seed, 1, k, static_cast<std::uint64_t>(i))));
      report.human_sizes.push_back(tuples[k].back().num_nodes());
    }
  }
  std::vector<fsc::StochasticFsc> unions;
  for (const auto& t : tuples) unions.push_back(fsc::union_fsc(t, uniform));
  const double humans_s = seconds_since(t0);

  // Families: one per objective, then the unions.
  std::vector<std::string> families;
  for (const RewardTable& r : model.rewards) families.push_back(r.name);
  families.push_back("union");
  auto human_at = [&](std::size_t family, std::size_t k) -> const fsc::StochasticFsc& {
    return family < static_cast<std::size_t>(objectives) ? tuples[k][family] : unions[k];
  };

  t0 = Clock::now();
  if (spec.best_response) {
    std::vector<std::shared_ptr<robot::RobotPolicy>> brs(unions.size());
    parallel_for(unions.size(), spec.threads, [&](std::size_t k) {
      brs[k] = std::make_shared<robot::RobotPolicy>(
          robot::solve_robot(robot::compile_robot_pomdp(model, unions[k]), spec.robot_solver));
    });
    for (std::size_t k = 0; k < brs.size(); ++k) {
      robots.push_back({"best-response#" + std::to_string(k), "best-response", brs[k]});
    }
  }
  const double best_response_s = seconds_since(t0);

  // Every robot against every human of every family.
  const std::size_t H = spec.human_pairs;
  const std::size_t F = families.size();
  const std::size_t jobs = robots.size() * F * H;
  std::vector<std::vector<EpisodeTrace>> results(jobs);
  auto success = [&task](StateIndex s) { return task.is_success(s); };
  t0 = Clock::now();
  parallel_for(jobs, spec.threads, [&](std::size_t job) {
    const std::size_t r = job / (F * H);
    const std::size_t f = (job / H) % F;
    const std::size_t k = job % H;
    robot::RobotExecutor executor(robots[r].policy, spec.recovery);
    auto& out = results[job];
    for (std::size_t e = 0; e < spec.episodes_per_human; ++e) {
      const std::uint64_t seed = derive_seed(spec.seed, 2, f * H + k, e);
      out.push_back(simulate_episode(model, success, human_at(f, k), executor, seed, spec.horizon));
    }
  });
  const double evaluation_s = seconds_since(t0);

  // Deterministic reduction in (row, family, human, episode) order.
  std::vector<std::string> rows;
  for (const Robot& r : robots) {
    if (std::find(rows.begin(), rows.end(), r.row) == rows.end()) rows.push_back(r.row);
  }
  for (const std::string& row : rows) {
    for (std::size_t f = 0; f < F; ++f) {
      std::vector<EpisodeTrace> cell;
      for (std::size_t r = 0; r < robots.size(); ++r) {
        if (robots[r].row != row) continue;
        for (std::size_t k = 0; k < H; ++k) {
          const auto& eps = results[(r * F + f) * H + k];
          cell.insert(cell.end(), eps.begin(), eps.end());
          if (spec.keep_traces) {
            for (const EpisodeTrace& t : eps) {
              report.traces.push_back({robots[r].name, families[f], k, t});
            }
          }
        }
      }
      report.cells.push_back(summarize(row, families[f], cell));
    }
  }

  report.metadata = {{"spec", campaign_spec_to_json(spec)},
                     {"families", families},
                     {"humans_per_family", H},
                     {"episodes_per_human", spec.episodes_per_human},
                     {"threads", spec.threads == 0 ? std::thread::hardware_concurrency()
                                                   : spec.threads},
                     {"seconds",
                      {{"humans", humans_s},
                       {"best_response", best_response_s},
                       {"evaluation", evaluation_s},
                       {"total", seconds_since(start)}}}};
  return report;
}

std::string report_csv(const CampaignReport& report) {
  std::ostringstream os;
  os << "robot,family,episodes,successes,success_rate,mean_value,std_error,mean_discounted\n";
  for (const CellResult& c : report.cells) {
    os << c.robot << ',' << c.family << ',' << c.episodes << ',' << c.successes << ','
       << fmt(c.success_rate) << ',' << fmt(c.mean_value) << ',' << fmt(c.std_error) << ','
       << fmt(c.mean_discounted) << '\n';
  }
  return os.str();
}

std::string timings_csv(const CampaignReport& report) {
  std::ostringstream os;
  os << "robot,stage,seconds\n";
  for (const StageTiming& t : report.timings) {
    os << t.robot << ',' << t.stage << ',' << fmt(t.seconds) << '\n';
  }
  return os.str();
}

json report_to_json(const CampaignReport& report) {
  json cells = json::array();
  for (const CellResult& c : report.cells) {
    cells.push_back({{"robot", c.robot},
                     {"family", c.family},
                     {"episodes", c.episodes},
                     {"successes", c.successes},
                     {"success_rate", c.success_rate},
                     {"mean_value", c.mean_value},
                     {"std_error", c.std_error},
                     {"mean_discounted", c.mean_discounted}});
  }
  json timings = json::array();
  for (const StageTiming& t : report.timings) {
    timings.push_back({{"robot", t.robot}, {"stage", t.stage}, {"seconds", t.seconds}});
  }
  json policies = json::array();
  for (const PolicySummary& p : report.policies) {
    policies.push_back({{"robot", p.robot},
                        {"fsc_nodes", p.fsc_nodes},
                        {"fsc_depths", p.fsc_depths},
                        {"extended_states", p.extended_states},
                        {"alpha_vectors", p.alpha_vectors},
                        {"initial_value", p.initial_value},
                        {"residual", p.residual}});
  }
  return {{"cells", std::move(cells)},
          {"timings", std::move(timings)},
          {"policies", std::move(policies)},
          {"human_sizes", report.human_sizes},
          {"metadata", report.metadata}};
}

void write_campaign_outputs(const CampaignReport& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text;
  };
  write("report.csv", report_csv(report));
  write("timings.csv", timings_csv(report));
  write("report.json", report_to_json(report).dump(2));
  if (!report.traces.empty()) {
    json traces = json::array();
    for (const auto& t : report.traces) {
      json j = trace_to_json(t.trace);
      j["robot"] = t.robot;
      j["family"] = t.family;
      j["human"] = t.human;
      traces.push_back(std::move(j));
    }
    write("traces.json", traces.dump());
  }
}

}  // namespace coplan::harness
