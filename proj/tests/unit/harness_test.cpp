#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "core/errors.hpp"
#include "core/grid_task.hpp"
#include "fsc/evaluate.hpp"
#include "harness/campaign.hpp"
#include "harness/episode.hpp"
#include "robot/policy.hpp"
#include "support/oracles.hpp"

using namespace coplan;
using namespace coplan::harness;

namespace {

// Chain 0 -> 1 -> 2 regardless of actions; 2 is the absorbing goal. Every
// step costs 1 and entering the goal pays 10.
DecPomdpModel make_chain() {
  DecPomdpModel m;
  m.state_names = {"a", "b", "goal"};
  m.human = {"human", {"go"}, {"none"}};
  m.robot = {"robot", {"go"}, {"none"}};
  m.transition = SparseKernel::from_triplets(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 2, 1.0}});
  m.observation = SparseKernel::from_triplets(3, {{0, 0, 1.0}, {1, 0, 1.0}, {2, 0, 1.0}});
  m.rewards = {{1, "only", {-1.0, 9.0, 5.0}}};
  m.initial_belief = Belief::dirac(0);
  m.discount = 0.5;
  return m;
}

CampaignSpec tiny_spec() {
  CampaignSpec spec;
  spec.seed = 3;
  spec.mpomdp_solver.belief_points = 150;
  spec.robot_solver.belief_points = 150;
  spec.robust = {{"robust", 0.5, 15, std::nullopt}};
  spec.human_pairs = 2;
  spec.human_max_nodes = 15;
  spec.episodes_per_human = 2;
  spec.threads = 1;
  return spec;
}

}  // namespace

TEST(Episode, AlwaysWaitOnTheGridFails) {
  const GridTask task({});
  const DecPomdpModel& m = task.model();
  const auto human = fsc::constant_fsc(7, m.num_human_observations(), static_cast<int>(HumanAction::Wait));
  robot::FscRobot robot(fsc::constant_fsc(7, m.num_robot_observations(), static_cast<int>(RobotAction::Wait)));
  const EpisodeTrace t = simulate_episode(
      m, [&](StateIndex s) { return success_predicate(task, s); }, human, robot, 1, 30);
  EXPECT_FALSE(t.success);
  EXPECT_FALSE(t.terminal);
  EXPECT_EQ(t.steps.size(), 30u);
  // Each step: robot action cost -2 and the human's waiting penalty -1.
  EXPECT_DOUBLE_EQ(t.cumulative_reward, 30 * (-1.0) + 30 * (-2.0));
  double sum = 0.0;
  for (const StepRecord& r : t.steps) sum += r.reward;
  EXPECT_DOUBLE_EQ(sum, t.cumulative_reward);
}

TEST(Episode, StopsAtSuccessWithoutFurtherRewards) {
  const DecPomdpModel m = make_chain();
  robot::FscRobot robot(fsc::constant_fsc(1, 1, 0));
  const EpisodeTrace t =
      simulate_episode(m, [](StateIndex s) { return s == 2; }, fsc::constant_fsc(1, 1, 0), robot, 4, 30);
  EXPECT_TRUE(t.success);
  EXPECT_TRUE(t.terminal);
  ASSERT_EQ(t.steps.size(), 2u);
  EXPECT_EQ(t.final_state, 2);
  EXPECT_DOUBLE_EQ(t.cumulative_reward, -1.0 + 9.0);
  EXPECT_DOUBLE_EQ(t.discounted_reward, -1.0 + 0.5 * 9.0);
}

TEST(Episode, SameSeedSameTrace) {
  std::mt19937_64 rng(50);
  const DecPomdpModel m = oracle::random_dec_pomdp(rng, 4, 2, 2, 2, 2);
  const auto h = oracle::random_fsc(rng, 3, 2, 2);
  const auto r = oracle::random_fsc(rng, 2, 2, 2);
  auto run = [&](std::uint64_t seed) {
    robot::FscRobot robot(r);
    return trace_to_json(simulate_episode(m, [](StateIndex) { return false; }, h, robot, seed, 20));
  };
  EXPECT_EQ(run(7), run(7));
  EXPECT_NE(run(7), run(8));
}

TEST(Episode, SuccessPredicateOnDeviceStatuses) {
  const GridTask task({});
  GridState s = task.decode(task.initial_state());
  EXPECT_FALSE(success_predicate(task, task.encode(s)));
  s.device_needs_work.assign(s.device_needs_work.size(), false);
  EXPECT_TRUE(success_predicate(task, task.encode(s)));
  s.device_needs_work[0] = true;
  EXPECT_FALSE(success_predicate(task, task.encode(s)));
}

TEST(Episode, TraceJsonRoundTrip) {
  std::mt19937_64 rng(51);
  const DecPomdpModel m = oracle::random_dec_pomdp(rng, 4, 2, 2, 2, 2);
  robot::FscRobot robot(oracle::random_fsc(rng, 2, 2, 2));
  const EpisodeTrace t =
      simulate_episode(m, [](StateIndex) { return false; }, oracle::random_fsc(rng, 3, 2, 2), robot, 9, 12);
  const json j = trace_to_json(t);
  EXPECT_EQ(trace_to_json(trace_from_json(j)), j);
  for (const char* key : {"seed", "steps", "success", "cumulative_reward", "partial"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_THROW(trace_from_json(json{{"seed", 1}}), ModelError);
}

TEST(Episode, UnionValueIsTheMixture) {
  std::mt19937_64 rng(52);
  const DecPomdpModel m = oracle::random_dec_pomdp(rng, 4, 2, 2, 2, 2);
  const auto left = oracle::random_fsc(rng, 2, 2, 2);
  const auto right = oracle::random_fsc(rng, 3, 2, 2);
  const auto robot_fsc = oracle::random_fsc(rng, 2, 2, 2);
  const auto unions = objective_union_sampler({{left, right}});
  ASSERT_EQ(unions.size(), 1u);
  fsc::PolicyValueOptions opt;
  opt.horizon = 10;
  const double expected = 0.5 * fsc::fsc_policy_value(m, left, robot_fsc, opt).value +
                          0.5 * fsc::fsc_policy_value(m, right, robot_fsc, opt).value;
  const int n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  robot::FscRobot robot(robot_fsc);
  for (int i = 0; i < n; ++i) {
    const double v =
        simulate_episode(m, [](StateIndex) { return false; }, unions[0], robot, 1000 + i, 10).cumulative_reward;
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_LE(std::abs(mean - expected), 3 * se);
}

TEST(Episode, SimulatedTransitionsFitTheModel) {
  std::mt19937_64 rng(53);
  const DecPomdpModel m = oracle::random_dec_pomdp(rng, 3, 2, 2, 2, 2);
  const auto human = oracle::random_fsc(rng, 2, 2, 2);
  robot::FscRobot robot(oracle::random_fsc(rng, 2, 2, 2));
  std::map<std::pair<int, int>, std::map<int, double>> next;  // (s, a) -> s' counts
  std::map<int, std::map<int, double>> acts;                  // n_H -> a_H counts
  std::size_t steps = 0;
  for (std::uint64_t e = 0; steps < 100000; ++e) {
    const EpisodeTrace t = simulate_episode(m, [](StateIndex) { return false; }, human, robot, e, 25);
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      const StepRecord& r = t.steps[i];
      const StateIndex s2 = i + 1 < t.steps.size() ? t.steps[i + 1].state : t.final_state;
      next[{r.state, m.joint_action(r.human_action, r.robot_action)}][s2] += 1;
      acts[r.human_node][r.human_action] += 1;
      ++steps;
    }
  }
  double chi2 = 0.0;
  int df = 0;
  for (const auto& [key, counts] : next) {
    double total = 0.0;
    for (const auto& [s2, c] : counts) total += c;
    int cells = 0;
    for (const Outcome& o : m.next_states(key.first, key.second)) {
      const double expected = total * o.prob;
      const double observed = counts.count(o.index) ? counts.at(o.index) : 0.0;
      chi2 += (observed - expected) * (observed - expected) / expected;
      ++cells;
    }
    for (const auto& [s2, c] : counts) ASSERT_GT(oracle::T(m, key.first, key.second, s2), 0.0);
    df += cells - 1;
  }
  for (const auto& [node, counts] : acts) {
    double total = 0.0;
    for (const auto& [a, c] : counts) total += c;
    int cells = 0;
    for (std::size_t a = 0; a < 2; ++a) {
      const double p = human.node(node).action_dist[a];
      if (p == 0.0) continue;
      const double observed = counts.count(static_cast<int>(a)) ? counts.at(static_cast<int>(a)) : 0.0;
      chi2 += (observed - total * p) * (observed - total * p) / (total * p);
      ++cells;
    }
    df += cells - 1;
  }
  ASSERT_GT(df, 0);
  const double critical = boost::math::quantile(boost::math::chi_squared(df), 0.99);
  EXPECT_LT(chi2, critical) << "df=" << df;
}

TEST(Campaign, SummaryOfNoEpisodesIsZero) {
  const CellResult c = summarize("r", "f", {});
  EXPECT_EQ(c.episodes, 0u);
  EXPECT_EQ(c.success_rate, 0.0);
  EXPECT_EQ(c.mean_value, 0.0);
  EXPECT_EQ(c.std_error, 0.0);
}

TEST(Campaign, SummaryStatistics) {
  std::vector<EpisodeTrace> eps(4);
  const double values[] = {10, 20, 30, 40};
  for (int i = 0; i < 4; ++i) {
    eps[i].cumulative_reward = values[i];
    eps[i].success = i % 2 == 0;
  }
  const CellResult c = summarize("r", "f", eps);
  EXPECT_EQ(c.successes, 2u);
  EXPECT_DOUBLE_EQ(c.success_rate, 0.5);
  EXPECT_DOUBLE_EQ(c.mean_value, 25.0);
  // Sample standard deviation 12.9099 over sqrt(4).
  EXPECT_NEAR(c.std_error, std::sqrt(500.0 / 3.0) / 2.0, 1e-12);
}

TEST(Campaign, ZeroEpisodesGiveAnEmptyReport) {
  CampaignSpec spec = tiny_spec();
  spec.episodes_per_human = 0;
  const CampaignReport r = run_campaign(spec);
  for (const CellResult& c : r.cells) {
    EXPECT_EQ(c.episodes, 0u);
    EXPECT_EQ(c.success_rate, 0.0);
    EXPECT_TRUE(std::isfinite(c.mean_value));
  }
  EXPECT_NE(report_csv(r).find("robot,family,episodes"), std::string::npos);
}

TEST(Campaign, ReproducibleCsvAndStructure) {
  const CampaignSpec spec = tiny_spec();
  const CampaignReport a = run_campaign(spec);
  CampaignSpec threaded = spec;
  threaded.threads = 3;
  const CampaignReport b = run_campaign(threaded);
  EXPECT_EQ(report_csv(a), report_csv(b));
  // Robust row plus the best-response row, each against left, right, union.
  ASSERT_EQ(a.cells.size(), 6u);
  ASSERT_NE(a.find("robust", "union"), nullptr);
  ASSERT_NE(a.find("best-response", "prefer-left"), nullptr);
  EXPECT_EQ(a.find("robust", "union")->episodes, 2u * 2u);
  for (const CellResult& c : a.cells) {
    EXPECT_GE(c.success_rate, 0.0);
    EXPECT_LE(c.success_rate, 1.0);
  }
  // Four stage rows per robust robot, in pipeline order.
  std::vector<std::string> stages;
  for (const StageTiming& t : a.timings) {
    if (t.robot == "robust") stages.push_back(t.stage);
  }
  EXPECT_EQ(stages, (std::vector<std::string>{kStageConversion, kStageExtraction, kStageCompile,
                                              kStageSolve}));
  EXPECT_EQ(timings_csv(a).substr(0, 19), "robot,stage,seconds");
  EXPECT_EQ(a.human_sizes.size(), 4u);
}

TEST(Campaign, SpecJsonRoundTripAndDefaults) {
  const CampaignSpec d = campaign_spec_from_json(json::object());
  EXPECT_EQ(d.human_pairs, 20u);
  EXPECT_EQ(d.episodes_per_human, 10u);
  EXPECT_EQ(d.horizon, 30);
  EXPECT_EQ(d.recovery, robot::Recovery::Reset);
  CampaignSpec s = tiny_spec();
  s.robust.push_back({"loaded", 0.3, 100, std::string("p.json")});
  s.recovery = robot::Recovery::None;
  const json j = campaign_spec_to_json(s);
  EXPECT_EQ(campaign_spec_to_json(campaign_spec_from_json(j)), j);
  EXPECT_THROW(campaign_spec_from_json(json{{"estimator", "oracle"}}), InvalidArgument);
}

TEST(Campaign, MissingArtifactIsNamed) {
  CampaignSpec spec = tiny_spec();
  spec.robust = {{"loaded", 0.5, 200, std::string("/nonexistent/robot.json")}};
  spec.best_response = false;
  try {
    run_campaign(spec);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/robot.json"), std::string::npos);
  }
}

TEST(Campaign, OutputsWritten) {
  CampaignSpec spec = tiny_spec();
  spec.keep_traces = true;
  spec.best_response = false;
  const CampaignReport r = run_campaign(spec);
  const auto dir = std::filesystem::temp_directory_path() / "coplan_campaign_outputs";
  std::filesystem::remove_all(dir);
  write_campaign_outputs(r, dir.string());
  for (const char* f : {"report.csv", "timings.csv", "report.json", "traces.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream in(dir / "traces.json");
  const json traces = json::parse(in);
  ASSERT_FALSE(traces.empty());
  EXPECT_NO_THROW(trace_from_json(traces.at(0)));
  EXPECT_TRUE(traces.at(0).contains("family"));
  std::filesystem::remove_all(dir);
}
