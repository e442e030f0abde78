#pragma once

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sentinel/core/error.hpp"
#include "sentinel/monitor/report.hpp"

namespace sentinel::monitor {

/// One report as a single UTF-8 JSON line, newline-terminated.
inline std::string encode_record(const MonitorReport& r) {
  nlohmann::json j{{"monitor_id", r.monitor_id}, {"entity_id", r.entity_id},
                   {"value", r.value},           {"unit", to_string(r.unit)},
                   {"level", to_string(r.level)}, {"timestamp", r.timestamp},
                   {"message", r.message}};
  return j.dump() + "\n";
}

inline MonitorReport decode_record(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad record: ") + e.what());
  }
  MonitorReport r;
  try {
    r.monitor_id = j.at("monitor_id").get<std::string>();
    r.entity_id = j.at("entity_id").get<std::string>();
    r.value = j.at("value").get<double>();
    r.timestamp = j.at("timestamp").get<Nanos>();
    r.message = j.at("message").get<std::string>();
    auto unit = parse_unit(j.at("unit").get<std::string>());
    auto level = parse_level(j.at("level").get<std::string>());
    if (!unit || !level) throw Error("bad record: unknown unit or level");
    r.unit = *unit;
    r.level = *level;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad record: ") + e.what());
  }
  return r;
}

/// Fans report lines out to every client of a local (unix-domain) socket.
/// Writes are non-blocking; a client that cannot keep up is disconnected
/// rather than stalling the publisher.
class RecordStreamServer {
 public:
  explicit RecordStreamServer(std::filesystem::path socket_path) : path_(std::move(socket_path)) {
    listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error("socket: " + std::string(std::strerror(errno)));
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    const std::string p = path_.string();
    if (p.size() >= sizeof(addr.sun_path)) throw Error("socket path too long: " + p);
    std::memcpy(addr.sun_path, p.c_str(), p.size() + 1);
    std::filesystem::remove(path_);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
        ::listen(listen_fd_, 16) < 0) {
      const std::string msg = std::strerror(errno);
      ::close(listen_fd_);
      throw Error("bind " + p + ": " + msg);
    }
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  RecordStreamServer(const RecordStreamServer&) = delete;
  RecordStreamServer& operator=(const RecordStreamServer&) = delete;

  ~RecordStreamServer() {
    stopping_ = true;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::lock_guard lock(mutex_);
    for (int fd : clients_) ::close(fd);
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

  void publish(const MonitorReport& r) { broadcast(encode_record(r)); }

  void broadcast(const std::string& line) {
    std::lock_guard lock(mutex_);
    std::erase_if(clients_, [&](int fd) {
      const ssize_t n = ::send(fd, line.data(), line.size(), MSG_DONTWAIT | MSG_NOSIGNAL);
      if (n == static_cast<ssize_t>(line.size())) return false;
      ::close(fd);
      return true;
    });
  }

  std::size_t client_count() const {
    std::lock_guard lock(mutex_);
    return clients_.size();
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  void accept_loop() {
    while (!stopping_) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (stopping_) return;
        if (errno == EINTR) continue;
        return;
      }
      std::lock_guard lock(mutex_);
      clients_.push_back(fd);
    }
  }

  std::filesystem::path path_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  mutable std::mutex mutex_;
  std::vector<int> clients_;
};

}  // namespace sentinel::monitor
