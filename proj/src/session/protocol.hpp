#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "session/session.hpp"

namespace coplan::session {

// JSON message protocol of the live game. Client messages:
//   {type:"new_session", policy, rounds?, objective?, seed?}
//   {type:"action", session, action}
//   {type:"resume", session}
//   {type:"questionnaire", session, choice, after_round?, preferred_policy?, comment?}
// Server messages: "state", "round_end", "questionnaire_ack", "error"; every
// one carries a message_id, increasing across the handler's lifetime.
class ProtocolHandler {
 public:
  explicit ProtocolHandler(std::shared_ptr<SessionManager> manager);

  std::vector<json> handle(const json& message);
  // Parses the text first; malformed JSON yields one error message.
  std::vector<std::string> handle_text(const std::string& text);

  SessionManager& manager() { return *manager_; }

 private:
  json stamp(json message);
  json error(const std::string& code, const std::string& text);

  std::shared_ptr<SessionManager> manager_;
  std::atomic<std::uint64_t> next_message_id_{1};
};

}  // namespace coplan::session
