#pragma once

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <functional>
#include <list>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "sentinel/core/error.hpp"
#include "sentinel/orchestrator/orchestrator.hpp"

namespace sentinel::orchestrator {

/// Local control socket: one command per line, one JSON reply per line.
/// Commands from all connections go through one queue (a mutex), so at most
/// one orchestration command executes at a time.
class AdminServer {
 public:
  using Handler = std::function<std::string(const std::string&)>;

  AdminServer(std::filesystem::path path, Handler handler)
      : path_(std::move(path)), handler_(std::move(handler)) {
    fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error("socket: " + std::string(std::strerror(errno)));
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    const std::string p = path_.string();
    if (p.size() >= sizeof(addr.sun_path)) throw Error("socket path too long: " + p);
    std::memcpy(addr.sun_path, p.c_str(), p.size() + 1);
    std::filesystem::remove(path_);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(fd_, 8) < 0) {
      const std::string msg = std::strerror(errno);
      ::close(fd_);
      throw Error("bind " + p + ": " + msg);
    }
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  AdminServer(const AdminServer&) = delete;
  AdminServer& operator=(const AdminServer&) = delete;

  ~AdminServer() {
    stopping_ = true;
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::list<std::thread> sessions;
    {
      std::lock_guard lock(sessions_mutex_);
      for (int c : client_fds_) ::shutdown(c, SHUT_RDWR);
      sessions.swap(sessions_);
    }
    for (auto& t : sessions)
      if (t.joinable()) t.join();
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

 private:
  void accept_loop() {
    while (!stopping_) {
      const int c = ::accept(fd_, nullptr, nullptr);
      if (c < 0) {
        if (stopping_) return;
        if (errno == EINTR) continue;
        return;
      }
      std::lock_guard lock(sessions_mutex_);
      client_fds_.push_back(c);
      sessions_.emplace_back([this, c] { serve(c); });
    }
  }

  void serve(int c) {
    std::string buffer;
    char chunk[512];
    while (true) {
      const ssize_t n = ::recv(c, chunk, sizeof(chunk), 0);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t pos;
      while ((pos = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, pos);
        buffer.erase(0, pos + 1);
        std::string reply;
        {
          std::lock_guard queue(command_mutex_);
          reply = handler_(line);
        }
        reply += "\n";
        if (::send(c, reply.data(), reply.size(), MSG_NOSIGNAL) < 0) break;
      }
    }
    ::close(c);
    std::lock_guard lock(sessions_mutex_);
    client_fds_.remove(c);
  }

  std::filesystem::path path_;
  Handler handler_;
  int fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex command_mutex_;
  std::mutex sessions_mutex_;
  std::list<std::thread> sessions_;
  std::list<int> client_fds_;
};

/// Default command set: `status`, `switch <config>`, `restart <entity>`.
inline std::string handle_admin_command(Orchestrator& orch, const std::string& line) {
  std::istringstream in(line);
  std::string cmd, arg;
  in >> cmd >> arg;
  nlohmann::json reply;
  try {
    if (cmd == "status") {
      reply["ok"] = true;
      reply["active"] = orch.active_name();
      for (const auto& [id, s] : orch.states()) reply["entities"][id] = std::string(to_string(s));
    } else if (cmd == "switch" && !arg.empty()) {
      auto r = orch.switch_configuration(arg);
      reply["ok"] = true;
      reply["from"] = r.from;
      reply["to"] = r.to;
      reply["stopped"] = r.stops();
      reply["started"] = r.starts();
      reply["failed"] = r.failures();
    } else if (cmd == "restart" && !arg.empty()) {
      auto r = orch.restart_entity(arg);
      reply["ok"] = r.final_state == ProcessState::Running;
      reply["entity"] = r.entity_id;
      reply["state"] = std::string(to_string(r.final_state));
      reply["attempts"] = r.attempts;
    } else {
      reply["ok"] = false;
      reply["error"] = "unknown command: " + line;
    }
  } catch (const std::exception& e) {
    reply["ok"] = false;
    reply["error"] = e.what();
  }
  return reply.dump();
}

}  // namespace sentinel::orchestrator
