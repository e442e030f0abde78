#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sentinel/core/time.hpp"
#include "sentinel/monitor/liveness.hpp"
#include "sentinel/monitor/status_bus.hpp"

namespace sentinel::monitor {

/// Last heartbeat per supervised entity.
class LivenessTracker {
 public:
  explicit LivenessTracker(Nanos timeout = 3 * kNanosPerSecond) : timeout_(timeout) {}

  void heartbeat(const std::string& entity, Nanos t) {
    auto& e = entities_[entity];
    if (!e.last || t > *e.last) e.last = t;
  }

  /// Start watching an entity from scratch (after launch or clean restart).
  void watch(const std::string& entity) { entities_[entity] = Entry{}; }
  void unwatch(const std::string& entity) { entities_.erase(entity); }

  /// Entities in a deliberate transition are excluded without forgetting them.
  void suspend(const std::string& entity) { suspended_.insert(entity); }
  void resume(const std::string& entity) { suspended_.erase(entity); }
  bool suspended(const std::string& entity) const { return suspended_.contains(entity); }

  std::vector<MonitorReport> sample(Nanos now) const {
    std::vector<MonitorReport> out;
    for (const auto& [id, e] : entities_) {
      if (suspended_.contains(id)) continue;
      out.push_back(check_liveness(id, e.last, now, timeout_));
    }
    return out;
  }

  std::optional<Nanos> last_heartbeat(const std::string& entity) const {
    auto it = entities_.find(entity);
    return it == entities_.end() ? std::nullopt : it->second.last;
  }

  Nanos timeout() const { return timeout_; }

 private:
  struct Entry {
    std::optional<Nanos> last;
  };
  Nanos timeout_;
  std::map<std::string, Entry> entities_;
  std::set<std::string> suspended_;
};

/// Host load from /proc. Optional backend; tests use synthetic reports.
class ProcSampler {
 public:
  /// CPU busy percentage since the previous call; empty on the first call.
  std::optional<double> cpu_percent() {
    std::ifstream in("/proc/stat");
    std::string cpu;
    unsigned long long user, nice, sys, idle, iowait = 0, irq = 0, softirq = 0, steal = 0;
    if (!(in >> cpu >> user >> nice >> sys >> idle >> iowait >> irq >> softirq >> steal))
      return std::nullopt;
    const unsigned long long idle_all = idle + iowait;
    const unsigned long long total = user + nice + sys + idle_all + irq + softirq + steal;
    std::optional<double> pct;
    if (prev_total_ && total > *prev_total_) {
      const double dt = static_cast<double>(total - *prev_total_);
      const double di = static_cast<double>(idle_all - prev_idle_);
      pct = 100.0 * (1.0 - di / dt);
    }
    prev_total_ = total;
    prev_idle_ = idle_all;
    return pct;
  }

  static std::optional<double> ram_percent() {
    std::ifstream in("/proc/meminfo");
    std::string key, unit;
    double value = 0, total = 0, available = -1;
    while (in >> key >> value >> unit) {
      if (key == "MemTotal:") total = value;
      if (key == "MemAvailable:") available = value;
    }
    if (total <= 0 || available < 0) return std::nullopt;
    return 100.0 * (1.0 - available / total);
  }

 private:
  std::optional<unsigned long long> prev_total_;
  unsigned long long prev_idle_ = 0;
};

inline MonitorReport sample_report(const MonitorSpec& spec, double value, Nanos now) {
  auto c = classify_detailed(value, spec.band);
  return MonitorReport{spec.id, spec.entity_id, value, spec.unit, c.level, now, std::move(c.message)};
}

}  // namespace sentinel::monitor
