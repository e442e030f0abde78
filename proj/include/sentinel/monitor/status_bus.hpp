#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/core/error.hpp"
#include "sentinel/core/time.hpp"
#include "sentinel/monitor/level.hpp"
#include "sentinel/monitor/report.hpp"

namespace sentinel::monitor {

enum class MonitorKind : std::uint8_t {
  Cpu, Ram, Network, ClockSkew, Liveness, Rate, Localization, Navigation, Custom
};

constexpr std::string_view to_string(MonitorKind k) {
  switch (k) {
    case MonitorKind::Cpu: return "cpu";
    case MonitorKind::Ram: return "ram";
    case MonitorKind::Network: return "network";
    case MonitorKind::ClockSkew: return "clock_skew";
    case MonitorKind::Liveness: return "liveness";
    case MonitorKind::Rate: return "rate";
    case MonitorKind::Localization: return "localization";
    case MonitorKind::Navigation: return "navigation";
    case MonitorKind::Custom: return "custom";
  }
  return "custom";
}

inline std::optional<MonitorKind> parse_kind(std::string_view s) {
  for (auto k : {MonitorKind::Cpu, MonitorKind::Ram, MonitorKind::Network,
                 MonitorKind::ClockSkew, MonitorKind::Liveness, MonitorKind::Rate,
                 MonitorKind::Localization, MonitorKind::Navigation, MonitorKind::Custom}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

/// Nominal sampling period per monitor kind; 0 marks an event-driven monitor.
constexpr Nanos default_period(MonitorKind k) {
  switch (k) {
    case MonitorKind::Cpu:
    case MonitorKind::Ram:
    case MonitorKind::Network:
    case MonitorKind::Liveness: return kNanosPerSecond;
    case MonitorKind::Rate: return 5 * kNanosPerSecond;
    case MonitorKind::ClockSkew: return 30 * kNanosPerSecond;
    case MonitorKind::Localization:
    case MonitorKind::Navigation:
    case MonitorKind::Custom: return 0;
  }
  return 0;
}

inline constexpr int kStaleAfterPeriods = 3;

struct MonitorSpec {
  std::string id;
  std::string entity_id;
  MonitorKind kind = MonitorKind::Custom;
  Band band = Band::high_is_bad(0.5, 1.0);
  Nanos period = 0;
  Unit unit = Unit::None;

  bool event_driven() const { return period == 0; }
  bool operator==(const MonitorSpec&) const = default;
};

/// One snapshot of the status bus: exactly one entry per declared monitor.
struct AggregatedStatus {
  std::uint64_t sequence = 0;
  Nanos timestamp = 0;
  std::map<std::string, MonitorReport> entries;

  const MonitorReport* find(const std::string& monitor_id) const {
    auto it = entries.find(monitor_id);
    return it == entries.end() ? nullptr : &it->second;
  }

  MonitorLevel worst_level() const {
    MonitorLevel w = MonitorLevel::Ok;
    for (const auto& [id, r] : entries) w = worst(w, r.level);
    return w;
  }
};

using DropSink = std::function<void(const MonitorReport&, std::string_view reason)>;

/// Latest-report table over the declared monitor set. Not thread-safe; the
/// StatusBus wraps it for concurrent producers.
class Aggregator {
 public:
  explicit Aggregator(std::vector<MonitorSpec> declared = {}, DropSink on_drop = {})
      : on_drop_(std::move(on_drop)) {
    reconfigure(std::move(declared));
  }

  /// Swap the declared set. Reports of monitors that stay declared survive.
  void reconfigure(std::vector<MonitorSpec> declared) {
    std::map<std::string, MonitorSpec> specs;
    for (auto& s : declared) {
      if (!specs.emplace(s.id, s).second) throw Error("duplicate monitor id: " + s.id);
    }
    std::map<std::string, MonitorReport> kept;
    for (auto& [id, r] : latest_) {
      if (specs.contains(id)) kept.emplace(id, std::move(r));
    }
    specs_ = std::move(specs);
    latest_ = std::move(kept);
  }

  /// Returns false when the report was dropped.
  bool ingest(const MonitorReport& report) {
    if (!specs_.contains(report.monitor_id)) {
      ++dropped_;
      if (on_drop_) on_drop_(report, "undeclared monitor");
      return false;
    }
    auto it = latest_.find(report.monitor_id);
    if (it != latest_.end() && report.timestamp < it->second.timestamp) {
      if (on_drop_) on_drop_(report, "out-of-order timestamp");
      return false;
    }
    latest_.insert_or_assign(report.monitor_id, report);
    return true;
  }

  AggregatedStatus snapshot(Nanos now) {
    AggregatedStatus s;
    s.sequence = ++sequence_;
    s.timestamp = now;
    for (const auto& [id, spec] : specs_) {
      auto it = latest_.find(id);
      if (it == latest_.end()) {
        MonitorReport r{id, spec.entity_id, 0.0, spec.unit, MonitorLevel::Stale, now, "no report"};
        if (spec.event_driven()) {
          r.level = MonitorLevel::Ok;
          r.message = "no events";
        }
        s.entries.emplace(id, std::move(r));
        continue;
      }
      MonitorReport r = it->second;
      if (!spec.event_driven() && now - r.timestamp > kStaleAfterPeriods * spec.period) {
        r.level = MonitorLevel::Stale;
        r.message = "stale";
      }
      s.entries.emplace(id, std::move(r));
    }
    return s;
  }

  AggregatedStatus aggregate(std::span<const MonitorReport> reports, Nanos now) {
    for (const auto& r : reports) ingest(r);
    return snapshot(now);
  }

  const std::map<std::string, MonitorSpec>& declared() const { return specs_; }
  const MonitorSpec* spec(const std::string& id) const {
    auto it = specs_.find(id);
    return it == specs_.end() ? nullptr : &it->second;
  }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t sequence() const { return sequence_; }

 private:
  std::map<std::string, MonitorSpec> specs_;
  std::map<std::string, MonitorReport> latest_;
  std::uint64_t sequence_ = 0;
  std::uint64_t dropped_ = 0;
  DropSink on_drop_;
};

/// In-process status bus. Samplers publish from any thread; only the thread
/// calling pump() writes snapshots. Subscribers run on the pumping thread.
class StatusBus {
 public:
  using ReportSubscriber = std::function<void(const MonitorReport&)>;
  using SnapshotSubscriber = std::function<void(const AggregatedStatus&)>;

  explicit StatusBus(std::vector<MonitorSpec> declared = {}, DropSink on_drop = {})
      : aggregator_(std::move(declared), std::move(on_drop)) {}

  void publish(MonitorReport report) {
    std::lock_guard lock(inbox_mutex_);
    inbox_.push_back(std::move(report));
  }

  void subscribe_reports(ReportSubscriber s) {
    std::lock_guard lock(state_mutex_);
    report_subscribers_.push_back(std::move(s));
  }
  void subscribe_snapshots(SnapshotSubscriber s) {
    std::lock_guard lock(state_mutex_);
    snapshot_subscribers_.push_back(std::move(s));
  }

  /// Swap the declared monitor set. Takes effect at the next pump, so the
  /// new set and the next sequence number appear together.
  void reconfigure(std::vector<MonitorSpec> declared) {
    std::lock_guard lock(state_mutex_);
    aggregator_.reconfigure(std::move(declared));
  }

  std::shared_ptr<const AggregatedStatus> pump(Nanos now) {
    std::vector<MonitorReport> batch;
    {
      std::lock_guard lock(inbox_mutex_);
      batch.swap(inbox_);
    }
    std::shared_ptr<const AggregatedStatus> snap;
    std::vector<ReportSubscriber> report_subs;
    std::vector<SnapshotSubscriber> snap_subs;
    std::vector<MonitorReport> accepted;
    {
      std::lock_guard lock(state_mutex_);
      for (auto& r : batch) {
        if (aggregator_.ingest(r)) accepted.push_back(std::move(r));
      }
      snap = std::make_shared<const AggregatedStatus>(aggregator_.snapshot(now));
      latest_ = snap;
      report_subs = report_subscribers_;
      snap_subs = snapshot_subscribers_;
    }
    for (const auto& r : accepted)
      for (auto& s : report_subs) s(r);
    for (auto& s : snap_subs) s(*snap);
    return snap;
  }

  std::shared_ptr<const AggregatedStatus> latest() const {
    std::lock_guard lock(state_mutex_);
    return latest_;
  }

  std::uint64_t dropped() const {
    std::lock_guard lock(state_mutex_);
    return aggregator_.dropped();
  }

 private:
  mutable std::mutex inbox_mutex_;
  std::vector<MonitorReport> inbox_;
  mutable std::mutex state_mutex_;
  Aggregator aggregator_;
  std::shared_ptr<const AggregatedStatus> latest_;
  std::vector<ReportSubscriber> report_subscribers_;
  std::vector<SnapshotSubscriber> snapshot_subscribers_;
};

}  // namespace sentinel::monitor
