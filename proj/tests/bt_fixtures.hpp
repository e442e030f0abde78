#pragma once

#include <map>
#include <string>
#include <vector>

#include "sentinel/bt/arbiter.hpp"

namespace fixtures {

using namespace sentinel;
using namespace sentinel::bt;
using monitor::MonitorKind;
using monitor::MonitorSpec;

inline std::vector<MonitorSpec> monitors() {
  using monitor::Band;
  using monitor::Unit;
  return {
      {"alive/localization", "localization", MonitorKind::Liveness, Band::high_is_bad(3, 4), kNanosPerSecond, Unit::Seconds},
      {"alive/navigation", "navigation", MonitorKind::Liveness, Band::high_is_bad(3, 4), kNanosPerSecond, Unit::Seconds},
      {"skew/jetson", "jetson", MonitorKind::ClockSkew, Band::high_is_bad(20, 100), 30 * kNanosPerSecond, Unit::Milliseconds},
      {"localization", "localization", MonitorKind::Localization, Band::low_is_bad(0.5, 0.5 - 1e-9), 0, Unit::Flag},
      {"navigation", "navigation", MonitorKind::Navigation, Band::high_is_bad(0.5, 0.5 + 1e-9), 0, Unit::Flag},
  };
}

inline TreeDefinition definition() {
  TreeDefinition def;
  def.classes = {
      {"node_down", {"alive/localization", "alive/navigation"}, MonitorLevel::Error,
       {make_action(RecoveryId::RestartNode), make_action(RecoveryId::RequestSupervisor)}},
      {"clock_skew", {"skew/jetson"}, MonitorLevel::Error, {make_action(RecoveryId::ResyncClock)}},
      {"localization_lost", {"localization"}, MonitorLevel::Error,
       {make_action(RecoveryId::RotateSlow), make_action(RecoveryId::RestartLocalization)}},
      {"navigation_error", {"navigation"}, MonitorLevel::Error,
       {make_action(RecoveryId::Wait), make_action(RecoveryId::MoveBack)}},
  };
  return def;
}

/// Snapshot with every declared monitor OK except the given overrides.
inline AggregatedStatus snapshot(std::uint64_t seq, Nanos t,
                                 const std::map<std::string, MonitorLevel>& levels = {}) {
  AggregatedStatus s;
  s.sequence = seq;
  s.timestamp = t;
  for (const auto& m : monitors()) {
    monitor::MonitorReport r{m.id, m.entity_id, 0.0, m.unit, MonitorLevel::Ok, t, ""};
    if (auto it = levels.find(m.id); it != levels.end()) r.level = it->second;
    s.entries.emplace(m.id, r);
  }
  return s;
}

struct RecordingSink : ActionSink {
  struct Event {
    bool cancel = false;
    std::uint64_t handle = 0;
    std::string error_class;
    RecoveryId action = RecoveryId::Wait;
    std::string target;
  };
  std::vector<Event> events;

  void dispatch(std::uint64_t handle, const Dispatch& d) override {
    events.push_back({false, handle, d.error_class, d.action.id, d.target});
  }
  void cancel(std::uint64_t handle, const RunningAction& r, const std::string&) override {
    events.push_back({true, handle, r.error_class, r.action, {}});
  }
  std::vector<Event> dispatches() const {
    std::vector<Event> out;
    for (const auto& e : events)
      if (!e.cancel) out.push_back(e);
    return out;
  }
};

}  // namespace fixtures
