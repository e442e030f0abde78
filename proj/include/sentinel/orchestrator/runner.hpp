#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sentinel/core/time.hpp"
#include "sentinel/orchestrator/configuration.hpp"

namespace sentinel::orchestrator {

/// Executes entity descriptors. The orchestrator serializes calls to
/// start/stop/await_ready; alive() and heartbeats() may be called
/// concurrently from the supervision path and must not block on them.
class EntityRunner {
 public:
  virtual ~EntityRunner() = default;
  virtual bool start(const EntitySpec& spec, const std::filesystem::path& scratch) = 0;
  /// Blocks until the entity is up for its grace period; false if it died.
  virtual bool await_ready(const EntitySpec& spec) = 0;
  /// Graceful stop, then forced after `graceful`; false if it survives both.
  virtual bool stop(const std::string& id, Nanos graceful) = 0;
  virtual bool alive(const std::string& id) = 0;
  /// Heartbeats observed since the last call.
  virtual std::vector<std::pair<std::string, Nanos>> heartbeats(Nanos now) = 0;
};

/// In-memory runner for tests and the simulator. Every live entity beats
/// once per heartbeats() call.
class FakeRunner final : public EntityRunner {
 public:
  struct Behavior {
    bool crash_on_start = false;  // dies before its grace period ends
    bool refuse_stop = false;     // survives graceful and forced stop
  };

  bool start(const EntitySpec& spec, const std::filesystem::path&) override {
    std::lock_guard lock(mutex_);
    ++starts_[spec.id];
    alive_.insert(spec.id);
    return true;
  }

  bool await_ready(const EntitySpec& spec) override {
    if (ready_delay_) ready_delay_(spec);
    std::lock_guard lock(mutex_);
    if (behavior_[spec.id].crash_on_start) alive_.erase(spec.id);
    return alive_.contains(spec.id);
  }

  bool stop(const std::string& id, Nanos) override {
    std::lock_guard lock(mutex_);
    ++stops_[id];
    if (behavior_[id].refuse_stop) return false;
    alive_.erase(id);
    return true;
  }

  bool alive(const std::string& id) override {
    std::lock_guard lock(mutex_);
    return alive_.contains(id);
  }

  std::vector<std::pair<std::string, Nanos>> heartbeats(Nanos now) override {
    std::lock_guard lock(mutex_);
    std::vector<std::pair<std::string, Nanos>> out;
    for (const auto& id : alive_)
      if (!muted_.contains(id)) out.emplace_back(id, now);
    return out;
  }

  /// External kill: the entity is gone without the orchestrator knowing.
  void kill(const std::string& id) {
    std::lock_guard lock(mutex_);
    alive_.erase(id);
  }
  /// Alive but not answering pings (hung).
  void mute(const std::string& id, bool muted) {
    std::lock_guard lock(mutex_);
    if (muted) muted_.insert(id); else muted_.erase(id);
  }
  void set_behavior(const std::string& id, Behavior b) {
    std::lock_guard lock(mutex_);
    behavior_[id] = b;
  }
  /// Hook run (without the lock) inside await_ready, e.g. to block like a slow launch.
  void set_ready_delay(std::function<void(const EntitySpec&)> f) { ready_delay_ = std::move(f); }

  std::set<std::string> running() const {
    std::lock_guard lock(mutex_);
    return alive_;
  }
  int starts(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = starts_.find(id);
    return it == starts_.end() ? 0 : it->second;
  }
  int stops(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = stops_.find(id);
    return it == stops_.end() ? 0 : it->second;
  }

 private:
  mutable std::mutex mutex_;
  std::set<std::string> alive_;
  std::set<std::string> muted_;
  std::map<std::string, Behavior> behavior_;
  std::map<std::string, int> starts_;
  std::map<std::string, int> stops_;
  std::function<void(const EntitySpec&)> ready_delay_;
};

}  // namespace sentinel::orchestrator
