#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>

#include "sentinel/gateway/session.hpp"

namespace sentinel::gateway {

/// Fan-out buffer for the server-sent event stream. Keeps the last
/// `capacity` messages; a slow client skips what it missed.
class StreamHub {
 public:
  explicit StreamHub(std::size_t capacity = 256) : capacity_(capacity) {}

  void publish(const std::string& event, const Json& data) {
    {
      std::lock_guard lock(mutex_);
      messages_.push_back({++seq_, "event: " + event + "\ndata: " + data.dump() + "\n\n"});
      if (messages_.size() > capacity_) messages_.pop_front();
    }
    cv_.notify_all();
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  bool closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
  }

  std::uint64_t head() const {
    std::lock_guard lock(mutex_);
    return seq_;
  }

  /// Messages after `cursor`, waiting up to `timeout` for one to arrive.
  std::string wait_after(std::uint64_t& cursor, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || seq_ > cursor; });
    std::string out;
    for (const auto& m : messages_)
      if (m.seq > cursor) out += m.text;
    cursor = seq_;
    return out;
  }

 private:
  struct Message {
    std::uint64_t seq;
    std::string text;
  };
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Message> messages_;
  std::uint64_t seq_ = 0;
  bool closed_ = false;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string token;  // empty disables the check
  std::filesystem::path static_dir;  // console bundle, optional
};

/// HTTP front end of a SessionManager. The session manager and hub must
/// outlive the server.
///
///   GET  /sessions, GET /sessions/{id}[?supervisor=]
///   POST /sessions/{id}/pose | /teleop | /resolve
///   GET  /stream  (text/event-stream)
class GatewayServer {
 public:
  using ClockFn = std::function<Nanos()>;

  GatewayServer(SessionManager& sessions, StreamHub& hub, ServerOptions options, ClockFn clock)
      : sessions_(&sessions), hub_(&hub), options_(std::move(options)), clock_(std::move(clock)) {
    sessions_->on_change([hub = hub_](const InterventionSession& s) { hub->publish("session", to_json(s)); });
    routes();
  }

  ~GatewayServer() { stop(); }

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  /// Bind and serve in a background thread; returns the bound port.
  int start() {
    if (options_.port == 0)
      port_ = server_.bind_to_any_port(options_.host);
    else
      port_ = server_.bind_to_port(options_.host, options_.port) ? options_.port : -1;
    if (port_ < 0) throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  void stop() {
    hub_->close();
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }

 private:
  bool authorized(const httplib::Request& req) const {
    if (options_.token.empty()) return true;
    if (req.get_header_value("Authorization") == "Bearer " + options_.token) return true;
    return req.has_param("token") && req.get_param_value("token") == options_.token;
  }

  static void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static int status_for(const SessionError& e) {
    switch (e.code()) {
      case SessionError::Code::NotFound: return 404;
      case SessionError::Code::Closed: return 409;
      case SessionError::Code::Invalid: return 400;
    }
    return 400;
  }

  template <class F>
  httplib::Server::Handler guarded(F f) {
    return [this, f](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req)) {
        reply(res, 401, {{"error", "missing or wrong token"}});
        return;
      }
      try {
        f(req, res);
      } catch (const SessionError& e) {
        reply(res, status_for(e), {{"error", e.what()}});
      } catch (const nlohmann::json::exception& e) {
        reply(res, 400, {{"error", std::string("bad request body: ") + e.what()}});
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", e.what()}});
      }
    };
  }

  void action(const httplib::Request& req, httplib::Response& res, const std::string& kind) {
    const std::string id = req.matches[1];
    const Json body = req.body.empty() ? Json::object() : Json::parse(req.body);
    const std::string who = body.value("supervisor", std::string());
    SessionAction a = ConfirmFix{};
    if (kind == "pose")
      a = SetPose{body.at("x").get<double>(), body.at("y").get<double>(), body.value("theta", 0.0)};
    else if (kind == "teleop")
      a = Teleop{body.value("v", 0.0), body.value("omega", 0.0), body.value("duration_s", 1.0)};
    sessions_->handle_action(id, who, a, clock_());
    reply(res, 200, to_json(*sessions_->get(id)));
  }

  void routes() {
    server_.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      Json arr = Json::array();
      for (const auto& s : sessions_->list()) arr.push_back(to_json(s));
      reply(res, 200, arr);
    }));
    server_.Get(R"(/sessions/([A-Za-z0-9_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      if (req.has_param("supervisor")) {
        reply(res, 200, to_json(sessions_->engage(id, req.get_param_value("supervisor"))));
        return;
      }
      auto s = sessions_->get(id);
      if (!s) throw SessionError(SessionError::Code::NotFound, "no session " + id);
      reply(res, 200, to_json(*s));
    }));
    for (const char* kind : {"pose", "teleop", "resolve"}) {
      const std::string k = kind;
      server_.Post("/sessions/([A-Za-z0-9_-]+)/" + k,
                   guarded([this, k](const httplib::Request& req, httplib::Response& res) { action(req, res, k); }));
    }
    server_.Get("/stream", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req)) {
        reply(res, 401, {{"error", "missing or wrong token"}});
        return;
      }
      auto cursor = std::make_shared<std::uint64_t>(0);
      // Open with the current session list so a new client starts in sync.
      Json arr = Json::array();
      for (const auto& s : sessions_->list()) arr.push_back(to_json(s));
      auto first = std::make_shared<std::string>("event: sessions\ndata: " + arr.dump() + "\n\n");
      *cursor = hub_->head();
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream", [this, cursor, first](std::size_t, httplib::DataSink& sink) {
        if (!first->empty()) {
          if (!sink.write(first->data(), first->size())) return false;
          first->clear();
        }
        if (hub_->closed()) {
          sink.done();
          return false;
        }
        std::string chunk = hub_->wait_after(*cursor, std::chrono::milliseconds(500));
        if (chunk.empty()) chunk = ": keepalive\n\n";
        return sink.write(chunk.data(), chunk.size());
      });
    });
    if (!options_.static_dir.empty() && std::filesystem::is_directory(options_.static_dir))
      server_.set_mount_point("/", options_.static_dir.string());
  }

  SessionManager* sessions_;
  StreamHub* hub_;
  ServerOptions options_;
  ClockFn clock_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace sentinel::gateway
