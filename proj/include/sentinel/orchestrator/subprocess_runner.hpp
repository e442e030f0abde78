#pragma once

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sentinel/core/error.hpp"
#include "sentinel/orchestrator/runner.hpp"

namespace sentinel::orchestrator {

/// Runs entities as child processes. Each child gets its scratch directory as
/// working directory (and in $SENTINEL_SCRATCH) and its own process group;
/// stdout/stderr go to <log_dir>/<id>.log, truncated on every start.
class SubprocessRunner final : public EntityRunner {
 public:
  explicit SubprocessRunner(std::filesystem::path log_dir) : log_dir_(std::move(log_dir)) {
    std::filesystem::create_directories(log_dir_);
  }

  ~SubprocessRunner() override {
    std::vector<std::string> ids;
    {
      std::lock_guard lock(mutex_);
      for (const auto& [id, pid] : pids_) ids.push_back(id);
    }
    for (const auto& id : ids) stop(id, kNanosPerSecond);
  }

  bool start(const EntitySpec& spec, const std::filesystem::path& scratch) override {
    if (spec.command.empty()) throw Error("entity '" + spec.id + "' has no command");
    std::vector<std::string> args = spec.command;
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    const std::string log = (log_dir_ / (spec.id + ".log")).string();
    const std::string env = "SENTINEL_SCRATCH=" + scratch.string();
    const std::string cwd = scratch.string();

    const pid_t pid = ::fork();
    if (pid < 0) return false;
    if (pid == 0) {
      ::setpgid(0, 0);
      const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      if (fd >= 0) {
        ::dup2(fd, STDOUT_FILENO);
        ::dup2(fd, STDERR_FILENO);
        ::close(fd);
      }
      if (::chdir(cwd.c_str()) != 0) ::_exit(126);
      ::putenv(const_cast<char*>(env.c_str()));
      ::execvp(argv[0], argv.data());
      ::_exit(127);
    }
    std::lock_guard lock(mutex_);
    pids_[spec.id] = pid;
    return true;
  }

  bool await_ready(const EntitySpec& spec) override {
    std::this_thread::sleep_for(std::chrono::duration<double>(spec.startup_grace_s));
    return alive(spec.id);
  }

  bool stop(const std::string& id, Nanos graceful) override {
    pid_t pid;
    {
      std::lock_guard lock(mutex_);
      auto it = pids_.find(id);
      if (it == pids_.end()) return true;
      pid = it->second;
    }
    ::kill(-pid, SIGTERM);
    if (!wait_exit(pid, graceful)) {
      ::kill(-pid, SIGKILL);
      if (!wait_exit(pid, 2 * kNanosPerSecond)) return false;
    }
    std::lock_guard lock(mutex_);
    pids_.erase(id);
    return true;
  }

  bool alive(const std::string& id) override {
    std::lock_guard lock(mutex_);
    auto it = pids_.find(id);
    if (it == pids_.end()) return false;
    int status = 0;
    const pid_t r = ::waitpid(it->second, &status, WNOHANG);
    if (r == 0) return true;
    pids_.erase(it);
    return false;
  }

  std::vector<std::pair<std::string, Nanos>> heartbeats(Nanos now) override {
    std::vector<std::string> ids;
    {
      std::lock_guard lock(mutex_);
      for (const auto& [id, pid] : pids_) ids.push_back(id);
    }
    std::vector<std::pair<std::string, Nanos>> out;
    for (const auto& id : ids)
      if (alive(id)) out.emplace_back(id, now);
    return out;
  }

  std::filesystem::path log_path(const std::string& id) const { return log_dir_ / (id + ".log"); }

 private:
  static bool wait_exit(pid_t pid, Nanos timeout) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::nanoseconds(timeout);
    while (std::chrono::steady_clock::now() < deadline) {
      int status = 0;
      const pid_t r = ::waitpid(pid, &status, WNOHANG);
      if (r == pid || (r < 0 && errno == ECHILD)) return true;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return false;
  }

  std::filesystem::path log_dir_;
  std::mutex mutex_;
  std::map<std::string, pid_t> pids_;
};

}  // namespace sentinel::orchestrator
