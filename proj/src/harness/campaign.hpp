#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/grid_task.hpp"
#include "core/model_io.hpp"
#include "harness/episode.hpp"
#include "robot/policy.hpp"
#include "solver/mcts.hpp"
#include "solver/pbvi.hpp"

namespace coplan::harness {

// A robust robot built from stochastic human FSCs extracted at
// (temperature, max_nodes), or loaded from a saved robot policy file.
struct RobustConfig {
  std::string name;
  double temperature = 0.5;
  std::size_t max_nodes = 200;
  std::optional<std::string> policy_file;
};

struct CampaignSpec {
  GridTaskConfig grid;
  std::uint64_t seed = 1;
  // Q estimator for extraction: "pbvi" (one-step lookahead on the MPOMDP
  // value function, solved with mpomdp_solver) or "mcts" (online search).
  std::string estimator = "pbvi";
  solver::PbviParams mpomdp_solver{.belief_points = 3000};
  solver::MctsParams mcts;
  solver::PbviParams robot_solver{.belief_points = 3000};
  double epsilon = 0.1;
  double action_threshold = 0.1;
  std::vector<RobustConfig> robust;
  // Deterministic synthetic humans: one tuple (one FSC per objective) per
  // index, plus the uniform union of each tuple.
  std::size_t human_pairs = 20;
  double human_temperature = 0.5;
  std::size_t human_max_nodes = 600;
  bool best_response = true;
  robot::Recovery recovery = robot::Recovery::Reset;
  std::size_t episodes_per_human = 10;
  int horizon = 30;
  std::size_t threads = 0;  // 0: hardware concurrency
  bool keep_traces = false;
};

CampaignSpec campaign_spec_from_json(const json& j);
json campaign_spec_to_json(const CampaignSpec& spec);

struct CellResult {
  std::string robot;
  std::string family;
  std::size_t episodes = 0;
  std::size_t successes = 0;
  double mean_value = 0.0;
  double std_error = 0.0;  // standard deviation of the mean
  double success_rate = 0.0;
  double mean_discounted = 0.0;
};

// Wall-clock seconds of one pipeline stage for one robot policy.
struct StageTiming {
  std::string robot;
  std::string stage;
  double seconds = 0.0;
};

inline constexpr const char* kStageConversion = "Dec-POMDP->MPOMDP";
inline constexpr const char* kStageExtraction = "Get Human Stoc. FSCs";
inline constexpr const char* kStageCompile = "Build Robot POMDP";
inline constexpr const char* kStageSolve = "Solve Robot POMDP";

struct PolicySummary {
  std::string robot;
  std::vector<std::size_t> fsc_nodes;  // per objective
  std::vector<int> fsc_depths;
  std::size_t extended_states = 0;
  std::size_t alpha_vectors = 0;
  double initial_value = 0.0;
  double residual = 0.0;
};

struct CampaignReport {
  std::vector<CellResult> cells;
  std::vector<StageTiming> timings;
  std::vector<PolicySummary> policies;
  std::vector<std::size_t> human_sizes;  // nodes per synthetic human FSC
  json metadata;
  // (robot, family, trace) when keep_traces is set.
  struct TaggedTrace {
    std::string robot;
    std::string family;
    std::size_t human;
    EpisodeTrace trace;
  };
  std::vector<TaggedTrace> traces;

  const CellResult* find(const std::string& robot, const std::string& family) const;
};

// Aggregates (value, success) samples in order; zero samples give zeros.
CellResult summarize(const std::string& robot, const std::string& family,
                     const std::vector<EpisodeTrace>& episodes);

CampaignReport run_campaign(const CampaignSpec& spec);

std::string report_csv(const CampaignReport& report);
std::string timings_csv(const CampaignReport& report);
json report_to_json(const CampaignReport& report);
// Writes report.csv, timings.csv, report.json and traces.json (if kept).
void write_campaign_outputs(const CampaignReport& report, const std::string& dir);

}  // namespace coplan::harness
