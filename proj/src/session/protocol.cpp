#include "session/protocol.hpp"

#include "core/errors.hpp"

namespace coplan::session {

ProtocolHandler::ProtocolHandler(std::shared_ptr<SessionManager> manager)
    : manager_(std::move(manager)) {
  if (!manager_) throw InvalidArgument("null session manager");
}

json ProtocolHandler::stamp(json message) {
  message["message_id"] = next_message_id_++;
  return message;
}

json ProtocolHandler::error(const std::string& code, const std::string& text) {
  return stamp({{"type", "error"}, {"code", code}, {"message", text}});
}

std::vector<json> ProtocolHandler::handle(const json& msg) {
  const GridTask& task = manager_->registry().task();
  try {
    if (!msg.is_object() || !msg.contains("type") || !msg.at("type").is_string()) {
      return {error("bad-request", "message must be an object with a string type")};
    }
    const std::string type = msg.at("type").get<std::string>();
    if (type == "new_session") {
      SessionConfig config;
      config.rounds = msg.value("rounds", config.rounds);
      config.objective = msg.value("objective", config.objective);
      config.seed = msg.value("seed", config.seed);
      const HumanView v = manager_->create_session(msg.at("policy").get<std::string>(), config);
      return {stamp(view_to_json(task, v))};
    }
    if (type == "resume") {
      return {stamp(view_to_json(task, manager_->view(msg.at("session").get<std::string>())))};
    }
    if (type == "action") {
      const std::string id = msg.at("session").get<std::string>();
      const ActionIndex a = parse_human_action(msg.at("action"));
      const StepResult r = manager_->submit_human_action(id, a);
      std::vector<json> out;
      if (r.round_end) {
        out.push_back(stamp({{"type", "round_end"},
                             {"session", id},
                             {"round", r.ended_round},
                             {"success", *r.round_end == Status::FinishedSuccess},
                             {"status", status_name(*r.round_end)},
                             {"cumulative_reward_hidden", true}}));
      }
      json state = view_to_json(task, r.view);
      state["human_invalid"] = r.human_invalid;
      state["robot_action"] = GridTask::robot_action_name(r.robot_action);
      out.push_back(stamp(std::move(state)));
      return out;
    }
    if (type == "questionnaire") {
      const std::string id = msg.at("session").get<std::string>();
      QuestionnaireAnswer a;
      a.choice = msg.at("choice").get<std::string>();
      a.after_round = msg.value("after_round", 0);
      a.preferred_policy = msg.value("preferred_policy", std::string());
      a.comment = msg.value("comment", std::string());
      manager_->submit_questionnaire(id, a);
      return {stamp({{"type", "questionnaire_ack"}, {"session", id}, {"choice", a.choice}})};
    }
    return {error("bad-request", "unknown message type: " + type)};
  } catch (const NotFound& e) {
    return {error("not-found", e.what())};
  } catch (const StateError& e) {
    return {error("finished", e.what())};
  } catch (const InvalidArgument& e) {
    return {error("invalid-argument", e.what())};
  } catch (const json::exception& e) {
    return {error("bad-request", e.what())};
  }
}

std::vector<std::string> ProtocolHandler::handle_text(const std::string& text) {
  std::vector<json> replies;
  try {
    replies = handle(json::parse(text));
  } catch (const json::parse_error& e) {
    replies = {error("bad-request", std::string("malformed JSON: ") + e.what())};
  }
  std::vector<std::string> out;
  for (const json& r : replies) out.push_back(r.dump());
  return out;
}

}  // namespace coplan::session
