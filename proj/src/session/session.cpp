#include "session/session.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <random>

#include "core/errors.hpp"
#include "core/model_io.hpp"

namespace coplan::session {

const char* status_name(Status s) {
  switch (s) {
    case Status::AwaitingHuman:
      return "awaiting-human";
    case Status::FinishedSuccess:
      return "finished-success";
    case Status::FinishedTimeout:
      return "finished-timeout";
  }
  return "unknown";
}

class Session {
 public:
  Session(std::string id, std::string policy_id, std::shared_ptr<const PolicyRegistry> registry,
          std::shared_ptr<const robot::RobotPolicy> policy, SessionConfig config)
      : id_(std::move(id)),
        policy_id_(std::move(policy_id)),
        registry_(std::move(registry)),
        config_(config),
        executor_(std::move(policy), config.recovery),
        rng_(config.seed) {
    start_round();
  }

  HumanView view() const {
    std::lock_guard lock(mutex_);
    return view_locked();
  }

  StepResult submit(ActionIndex a_h) {
    std::lock_guard lock(mutex_);
    if (complete_) throw StateError("session " + id_ + " is finished");
    if (a_h < 0 || a_h >= kActionsPerAgent) {
      throw InvalidArgument("invalid human action id " + std::to_string(a_h));
    }
    const GridTask& task = registry_->task();
    const DecPomdpModel& m = task.model();

    StepResult out;
    out.human_action = a_h;
    out.robot_action = executor_.step(robot_obs_);
    out.human_invalid = task.step(task.decode(state_), static_cast<HumanAction>(a_h),
                                  static_cast<RobotAction>(out.robot_action))
                            .human_invalid;
    const ActionIndex a = m.joint_action(a_h, out.robot_action);
    out.reward = m.r(config_.objective, state_, a);

    harness::StepRecord rec;
    rec.t = step_;
    rec.state = state_;
    rec.human_action = a_h;
    rec.robot_action = out.robot_action;
    state_ = sample(m.next_states(state_, a));
    const ObsIndex o = sample(m.observations(a, state_));
    rec.human_obs = m.human_observation(o);
    rec.robot_obs = m.robot_observation(o);
    rec.reward = out.reward;
    robot_obs_ = rec.robot_obs;
    current_.steps.push_back(rec);
    current_.cumulative_reward += out.reward;
    current_.discounted_reward += discount_ * out.reward;
    discount_ *= m.discount;
    ++step_;

    if (task.is_success(state_)) {
      status_ = Status::FinishedSuccess;
    } else if (step_ >= config_.horizon) {
      status_ = Status::FinishedTimeout;
    }
    if (status_ != Status::AwaitingHuman) {
      out.round_end = status_;
      out.ended_round = round_;
      current_.final_state = state_;
      current_.terminal = status_ == Status::FinishedSuccess;
      current_.success = current_.terminal;
      traces_.push_back(current_);
      if (round_ >= config_.rounds) {
        complete_ = true;
      } else {
        ++round_;
        start_round();
      }
    }
    out.view = view_locked();
    return out;
  }

  void answer(const QuestionnaireAnswer& a) {
    if (std::find(kQuestionnaireChoices.begin(), kQuestionnaireChoices.end(), a.choice) ==
        kQuestionnaireChoices.end()) {
      throw InvalidArgument("unknown questionnaire choice: " + a.choice);
    }
    std::lock_guard lock(mutex_);
    answers_.push_back(a);
  }

  SessionExport export_log() const {
    std::lock_guard lock(mutex_);
    SessionExport e{id_, policy_id_, traces_, answers_};
    if (!complete_ && step_ > 0) {
      harness::EpisodeTrace partial = current_;
      partial.final_state = state_;
      partial.partial = true;
      e.traces.push_back(std::move(partial));
    }
    return e;
  }

 private:
  HumanView view_locked() const {
    HumanView v;
    v.session = id_;
    v.policy = policy_id_;
    v.state = registry_->task().decode(state_);
    v.round = round_;
    v.step = step_;
    v.status = status_;
    v.complete = complete_;
    return v;
  }

  void start_round() {
    const DecPomdpModel& m = registry_->task().model();
    state_ = sample(m.initial_belief.entries());
    status_ = Status::AwaitingHuman;
    step_ = 0;
    robot_obs_.reset();
    discount_ = 1.0;
    const std::uint64_t seed = config_.seed * 1000 + static_cast<std::uint64_t>(round_);
    executor_.reset(seed);
    current_ = {};
    current_.seed = seed;
    current_.objective = config_.objective;
  }

  StateIndex sample(std::span<const Outcome> row) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    for (const Outcome& o : row) {
      if (u < o.prob) return o.index;
      u -= o.prob;
    }
    return row.back().index;
  }

  mutable std::mutex mutex_;
  std::string id_;
  std::string policy_id_;
  std::shared_ptr<const PolicyRegistry> registry_;
  SessionConfig config_;
  // The executor only ever sees robot observations.
  robot::RobotExecutor executor_;
  std::mt19937_64 rng_;
  StateIndex state_ = 0;
  std::optional<ObsIndex> robot_obs_;
  int round_ = 1;
  int step_ = 0;
  double discount_ = 1.0;
  Status status_ = Status::AwaitingHuman;
  bool complete_ = false;
  harness::EpisodeTrace current_;
  std::vector<harness::EpisodeTrace> traces_;
  std::vector<QuestionnaireAnswer> answers_;
};

PolicyRegistry::PolicyRegistry(GridTaskConfig config)
    : task_(std::make_shared<const GridTask>(std::move(config))) {}

void PolicyRegistry::add(const std::string& id,
                         std::shared_ptr<const robot::RobotPolicy> policy) {
  if (!policy) throw InvalidArgument("null policy");
  const DecPomdpModel& m = task_->model();
  if (policy->compiled.pomdp.num_actions() != m.robot.actions.size() ||
      policy->compiled.initial_observation != static_cast<ObsIndex>(m.robot.observations.size())) {
    throw ModelError("policy " + id + " was not compiled for this task layout");
  }
  policies_[id] = std::move(policy);
}

std::shared_ptr<PolicyRegistry> PolicyRegistry::load_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("policy directory not found: " + dir);
  GridTaskConfig config;
  const fs::path grid = fs::path(dir) / "grid.json";
  if (fs::exists(grid)) config = grid_config_from_json(read_json_file(grid.string()));
  auto reg = std::make_shared<PolicyRegistry>(config);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json" && entry.path().filename() != "grid.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    reg->add(f.stem().string(),
             std::make_shared<robot::RobotPolicy>(robot::load_robot_policy(f.string())));
  }
  return reg;
}

std::shared_ptr<const robot::RobotPolicy> PolicyRegistry::get(const std::string& id) const {
  auto it = policies_.find(id);
  if (it == policies_.end()) throw NotFound("unknown policy id: " + id);
  return it->second;
}

std::vector<std::string> PolicyRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, p] : policies_) out.push_back(id);
  return out;
}

SessionManager::SessionManager(std::shared_ptr<const PolicyRegistry> registry)
    : registry_(std::move(registry)) {
  if (!registry_) throw InvalidArgument("null policy registry");
}

SessionManager::~SessionManager() = default;

HumanView SessionManager::create_session(const std::string& policy_id,
                                         const SessionConfig& config) {
  if (config.rounds < 1 || config.horizon < 1) {
    throw InvalidArgument("rounds and horizon must be positive");
  }
  if (config.objective < 1 ||
      config.objective > static_cast<int>(registry_->task().model().rewards.size())) {
    throw InvalidArgument("objective id out of range");
  }
  auto policy = registry_->get(policy_id);
  std::lock_guard lock(mutex_);
  const std::string id = "s" + std::to_string(next_id_++);
  auto s = std::make_shared<Session>(id, policy_id, registry_, std::move(policy), config);
  sessions_[id] = s;
  return s->view();
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("unknown session: " + id);
  return it->second;
}

StepResult SessionManager::submit_human_action(const std::string& id, ActionIndex a_h) {
  return find(id)->submit(a_h);
}

HumanView SessionManager::view(const std::string& id) const { return find(id)->view(); }

void SessionManager::submit_questionnaire(const std::string& id, const QuestionnaireAnswer& a) {
  find(id)->answer(a);
}

SessionExport SessionManager::export_log(const std::string& id) const {
  return find(id)->export_log();
}

std::vector<std::string> SessionManager::session_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

ActionIndex parse_human_action(const json& j) {
  if (j.is_number_integer()) {
    const auto v = j.get<long long>();
    if (v < 0 || v >= kActionsPerAgent) {
      throw InvalidArgument("invalid human action id " + std::to_string(v));
    }
    return static_cast<ActionIndex>(v);
  }
  if (j.is_string()) {
    std::string name = j.get<std::string>();
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    for (int a = 0; a < kActionsPerAgent; ++a) {
      std::string candidate = GridTask::human_action_name(a);
      std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (candidate == name) return a;
    }
    throw InvalidArgument("unknown human action: " + j.get<std::string>());
  }
  throw InvalidArgument("action must be a name or an integer id");
}

json view_to_json(const GridTask& task, const HumanView& v) {
  json devices = json::array();
  for (std::size_t k = 0; k < task.devices().size(); ++k) {
    const Device& d = task.devices()[k];
    const bool work = v.state.device_needs_work[k];
    devices.push_back({{"x", d.cell.x},
                       {"y", d.cell.y},
                       {"kind", d.kind == DeviceKind::Repair ? "repair" : "maintenance"},
                       {"status", work ? (d.kind == DeviceKind::Repair ? "broken"
                                                                       : "needs-maintenance")
                                       : "good"}});
  }
  const GridTaskConfig& c = task.config();
  return {{"type", "state"},
          {"session", v.session},
          {"policy", v.policy},
          {"grid", {{"width", c.width}, {"height", c.height}}},
          {"toolbox", {{"x", c.toolbox_cell.x}, {"y", c.toolbox_cell.y}}},
          {"devices", std::move(devices)},
          {"holding", v.state.holding},
          {"round", v.round},
          {"step", v.step},
          {"status", status_name(v.status)},
          {"complete", v.complete},
          {"human_cell", {{"x", v.state.human.x}, {"y", v.state.human.y}}},
          {"robot_cell", {{"x", v.state.robot.x}, {"y", v.state.robot.y}}}};
}

json export_to_json(const SessionExport& e) {
  json traces = json::array();
  for (const harness::EpisodeTrace& t : e.traces) traces.push_back(harness::trace_to_json(t));
  json answers = json::array();
  for (const QuestionnaireAnswer& a : e.questionnaire) {
    answers.push_back({{"after_round", a.after_round},
                       {"choice", a.choice},
                       {"preferred_policy", a.preferred_policy},
                       {"comment", a.comment}});
  }
  return {{"session", e.session},
          {"policy", e.policy},
          {"traces", std::move(traces)},
          {"questionnaire", std::move(answers)}};
}

}  // namespace coplan::session
