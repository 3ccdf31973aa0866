#pragma once

#include <memory>
#include <string>

#include "session/protocol.hpp"

namespace coplan::server {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 0;  // 0 picks a free port
  std::string static_dir;   // served for plain GET requests when set
  int threads = 1;
};

// COPLAN_PORT if set and valid, otherwise `fallback`.
unsigned short port_from_env(unsigned short fallback);

// WebSocket game protocol plus HTTP endpoints on one port:
//   GET  /health
//   GET  /policies
//   GET  /sessions
//   GET  /sessions/<id>/export
//   POST /sessions/<id>/questionnaire
// Any request carrying a WebSocket upgrade is handed to the protocol.
class GameServer {
 public:
  GameServer(std::shared_ptr<session::SessionManager> manager, ServerOptions options);
  ~GameServer();
  GameServer(const GameServer&) = delete;
  GameServer& operator=(const GameServer&) = delete;

  // Binds and starts the worker threads; returns immediately.
  void start();
  unsigned short port() const;
  void stop();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace coplan::server
