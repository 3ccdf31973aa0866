#include "game_server.hpp"

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <mutex>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include "core/errors.hpp"

namespace coplan::server {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

unsigned short port_from_env(unsigned short fallback) {
  const char* v = std::getenv("COPLAN_PORT");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const long p = std::strtol(v, &end, 10);
  if (*end != '\0' || p < 0 || p > 65535) return fallback;
  return static_cast<unsigned short>(p);
}

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

Response json_response(const Request& req, http::status status, const json& body) {
  Response res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

std::string content_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

std::vector<std::string> split_path(const std::string& target) {
  std::string path = target.substr(0, target.find('?'));
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

Response route(session::ProtocolHandler& handler, const std::string& static_dir,
               const Request& req) {
  session::SessionManager& mgr = handler.manager();
  const auto parts = split_path(std::string(req.target()));
  try {
    if (req.method() == http::verb::get) {
      if (parts == std::vector<std::string>{"health"}) {
        return json_response(req, http::status::ok, {{"ok", true}});
      }
      if (parts == std::vector<std::string>{"policies"}) {
        return json_response(req, http::status::ok, {{"policies", mgr.registry().ids()}});
      }
      if (parts == std::vector<std::string>{"sessions"}) {
        return json_response(req, http::status::ok, {{"sessions", mgr.session_ids()}});
      }
      if (parts.size() == 3 && parts[0] == "sessions" && parts[2] == "export") {
        return json_response(req, http::status::ok,
                             session::export_to_json(mgr.export_log(parts[1])));
      }
      if (!static_dir.empty()) {
        namespace fs = std::filesystem;
        fs::path file = fs::path(static_dir);
        for (const std::string& p : parts) {
          if (p == "..") return json_response(req, http::status::bad_request, {{"error", "bad path"}});
          file /= p;
        }
        if (fs::is_directory(file)) file /= "index.html";
        std::ifstream in(file, std::ios::binary);
        if (in) {
          Response res{http::status::ok, req.version()};
          res.set(http::field::content_type, content_type(file));
          res.keep_alive(req.keep_alive());
          res.body().assign(std::istreambuf_iterator<char>(in), {});
          res.prepare_payload();
          return res;
        }
      }
    } else if (req.method() == http::verb::post && parts.size() == 3 &&
               parts[0] == "sessions" && parts[2] == "questionnaire") {
      json body = json::parse(req.body());
      body["type"] = "questionnaire";
      body["session"] = parts[1];
      const json reply = handler.handle(body).front();
      const bool ok = reply.at("type") == "questionnaire_ack";
      return json_response(req, ok ? http::status::ok : http::status::bad_request, reply);
    }
    return json_response(req, http::status::not_found, {{"error", "not found"}});
  } catch (const NotFound& e) {
    return json_response(req, http::status::not_found, {{"error", e.what()}});
  } catch (const std::exception& e) {
    return json_response(req, http::status::bad_request, {{"error", e.what()}});
  }
}

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, session::ProtocolHandler& handler)
      : ws_(std::move(socket)), handler_(handler) {}

  void run(Request req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (!ec) do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    for (std::string& reply : handler_.handle_text(text)) outbox_.push_back(std::move(reply));
    do_write();
  }

  void do_write() {
    if (outbox_.empty()) {
      do_read();
      return;
    }
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()),
                    beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return;
    outbox_.pop_front();
    do_write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  session::ProtocolHandler& handler_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, session::ProtocolHandler& handler,
              const std::string& static_dir)
      : stream_(std::move(socket)), handler_(handler), static_dir_(static_dir) {}

  void run() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (websocket::is_upgrade(req_)) {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), handler_)->run(std::move(req_));
      return;
    }
    res_ = std::make_shared<Response>(route(handler_, static_dir_, req_));
    http::async_write(stream_, *res_,
                      beast::bind_front_handler(&HttpSession::on_write, shared_from_this(),
                                                res_->need_eof()));
  }

  void on_write(bool close, beast::error_code ec, std::size_t) {
    if (ec || close) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    do_read();
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  Request req_;
  std::shared_ptr<Response> res_;
  session::ProtocolHandler& handler_;
  const std::string& static_dir_;
};

}  // namespace

struct GameServer::Impl {
  Impl(std::shared_ptr<session::SessionManager> manager, ServerOptions opts)
      : options(std::move(opts)), handler(std::move(manager)), ioc(options.threads), acceptor(ioc) {}

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      std::make_shared<HttpSession>(std::move(socket), handler, options.static_dir)->run();
      do_accept();
    });
  }

  ServerOptions options;
  session::ProtocolHandler handler;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::vector<std::thread> workers;
  std::mutex mutex;
  std::condition_variable stopped_cv;
  bool stopped = false;
};

GameServer::GameServer(std::shared_ptr<session::SessionManager> manager, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(manager), std::move(options))) {}

GameServer::~GameServer() { stop(); }

void GameServer::start() {
  Impl& s = *impl_;
  beast::error_code ec;
  const tcp::endpoint ep{net::ip::make_address(s.options.address, ec), s.options.port};
  if (ec) throw InvalidArgument("bad listen address: " + s.options.address);
  s.acceptor.open(ep.protocol(), ec);
  if (!ec) s.acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) s.acceptor.bind(ep, ec);
  if (!ec) s.acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw IoError("cannot listen on port " + std::to_string(s.options.port) + ": " + ec.message());
  s.do_accept();
  for (int i = 0; i < std::max(1, s.options.threads); ++i) {
    s.workers.emplace_back([&s] { s.ioc.run(); });
  }
}

unsigned short GameServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void GameServer::stop() {
  Impl& s = *impl_;
  {
    std::lock_guard lock(s.mutex);
    if (s.stopped) return;
    s.stopped = true;
  }
  s.ioc.stop();
  for (auto& t : s.workers) {
    if (t.joinable()) t.join();
  }
  s.stopped_cv.notify_all();
}

void GameServer::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

}  // namespace coplan::server
