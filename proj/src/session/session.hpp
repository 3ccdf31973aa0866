#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "core/grid_task.hpp"
#include "harness/episode.hpp"
#include "robot/policy.hpp"

namespace coplan::session {

enum class Status { AwaitingHuman, FinishedSuccess, FinishedTimeout };
const char* status_name(Status s);

struct SessionConfig {
  int rounds = 8;
  int horizon = 30;
  int objective = 1;  // reward table used for the logged rewards
  std::uint64_t seed = 0;
  robot::Recovery recovery = robot::Recovery::Reset;
};

// What the human player sees: the full world state, never rewards.
struct HumanView {
  std::string session;
  std::string policy;
  GridState state;
  int round = 1;
  int step = 0;
  Status status = Status::AwaitingHuman;
  bool complete = false;  // all rounds played
};

struct StepResult {
  HumanView view;  // after the step (start of the next round if one ended)
  ActionIndex human_action = 0;
  ActionIndex robot_action = 0;
  double reward = 0.0;
  bool human_invalid = false;
  // Set when this step ended a round.
  std::optional<Status> round_end;
  int ended_round = 0;
};

inline const std::vector<std::string> kQuestionnaireChoices = {
    "no-adaptation", "human-adapts", "robot-adapts", "mutual"};

struct QuestionnaireAnswer {
  int after_round = 0;
  std::string choice;
  std::string preferred_policy;
  std::string comment;
};

struct SessionExport {
  std::string session;
  std::string policy;
  std::vector<harness::EpisodeTrace> traces;  // one per round; the last may be partial
  std::vector<QuestionnaireAnswer> questionnaire;
};

json view_to_json(const GridTask& task, const HumanView& view);
json export_to_json(const SessionExport& e);

// Loaded robot policies for one task layout. Read-only once built.
class PolicyRegistry {
 public:
  explicit PolicyRegistry(GridTaskConfig config = {});

  void add(const std::string& id, std::shared_ptr<const robot::RobotPolicy> policy);
  // Every *.json robot policy in the directory, keyed by file stem; a
  // grid.json file there sets the layout.
  static std::shared_ptr<PolicyRegistry> load_directory(const std::string& dir);

  std::shared_ptr<const robot::RobotPolicy> get(const std::string& id) const;
  std::vector<std::string> ids() const;
  const GridTask& task() const { return *task_; }

 private:
  std::shared_ptr<const GridTask> task_;
  std::map<std::string, std::shared_ptr<const robot::RobotPolicy>> policies_;
};

class Session;

// Thread-safe: sessions are independent and each serializes its own steps.
class SessionManager {
 public:
  explicit SessionManager(std::shared_ptr<const PolicyRegistry> registry);
  ~SessionManager();

  HumanView create_session(const std::string& policy_id, const SessionConfig& config = {});
  StepResult submit_human_action(const std::string& session_id, ActionIndex a_h);
  HumanView view(const std::string& session_id) const;
  void submit_questionnaire(const std::string& session_id, const QuestionnaireAnswer& answer);
  SessionExport export_log(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;

  const PolicyRegistry& registry() const { return *registry_; }

 private:
  std::shared_ptr<Session> find(const std::string& id) const;

  std::shared_ptr<const PolicyRegistry> registry_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

// Accepts a human action name (any case) or an integer id; throws
// InvalidArgument otherwise.
ActionIndex parse_human_action(const json& j);

}  // namespace coplan::session
