#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sentinel/core/error.hpp"
#include "sentinel/core/time.hpp"

namespace sentinel::metrics {

enum class EventKind : std::uint8_t {
  MonitorReport,
  ActionDispatch,
  ActionResult,
  ModeChange,
  DockingAttempt,
  SupervisorRequest,
  SupervisorResolution,
  ManualIntervention,
  OdometryDelta,
  DetectionCount,
  ConfigSwitch,
};

inline constexpr EventKind kAllEventKinds[] = {
    EventKind::MonitorReport,     EventKind::ActionDispatch,       EventKind::ActionResult,
    EventKind::ModeChange,        EventKind::DockingAttempt,       EventKind::SupervisorRequest,
    EventKind::SupervisorResolution, EventKind::ManualIntervention, EventKind::OdometryDelta,
    EventKind::DetectionCount,    EventKind::ConfigSwitch};

constexpr std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::MonitorReport: return "monitor_report";
    case EventKind::ActionDispatch: return "action_dispatch";
    case EventKind::ActionResult: return "action_result";
    case EventKind::ModeChange: return "mode_change";
    case EventKind::DockingAttempt: return "docking_attempt";
    case EventKind::SupervisorRequest: return "supervisor_request";
    case EventKind::SupervisorResolution: return "supervisor_resolution";
    case EventKind::ManualIntervention: return "manual_intervention";
    case EventKind::OdometryDelta: return "odometry_delta";
    case EventKind::DetectionCount: return "detection_count";
    case EventKind::ConfigSwitch: return "config_switch";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (EventKind k : kAllEventKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct EventPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  bool operator==(const EventPose&) const = default;
};

using Payload = nlohmann::ordered_json;

/// One log record. Payload fields depend on the kind (see docs/event-log.md).
struct Event {
  Nanos t = 0;
  EventKind kind = EventKind::ModeChange;
  std::string producer = "sim";
  std::optional<EventPose> pose;
  Payload data = Payload::object();

  bool operator==(const Event& o) const {
    return t == o.t && kind == o.kind && producer == o.producer && pose == o.pose && data == o.data;
  }

  template <class T>
  T get(const char* key, T fallback) const {
    auto it = data.find(key);
    if (it == data.end() || it->is_null()) return fallback;
    return it->template get<T>();
  }
};

/// Fixed-point rounding so serialized logs do not depend on last-bit
/// differences between math libraries.
inline double round6(double v) {
  if (!std::isfinite(v)) return v;
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

inline std::string encode_event(const Event& e) {
  Payload j = Payload::object();
  j["t"] = e.t;
  j["kind"] = std::string(to_string(e.kind));
  j["producer"] = e.producer;
  if (e.pose) j["pose"] = {round6(e.pose->x), round6(e.pose->y), round6(e.pose->theta)};
  j["data"] = e.data;
  return j.dump();
}

inline Event decode_event(std::string_view line) {
  Payload j;
  try {
    j = Payload::parse(line);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(std::string("malformed event: ") + ex.what());
  }
  if (!j.is_object() || !j.contains("t") || !j.contains("kind")) throw Error("malformed event: missing t or kind");
  Event e;
  e.t = j["t"].get<Nanos>();
  const auto kind = j["kind"].get<std::string>();
  auto k = parse_event_kind(kind);
  if (!k) throw Error("unknown event kind '" + kind + "'");
  e.kind = *k;
  if (j.contains("producer")) e.producer = j["producer"].get<std::string>();
  if (j.contains("pose")) {
    const auto& p = j["pose"];
    if (!p.is_array() || p.size() != 3) throw Error("malformed pose");
    e.pose = EventPose{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
  }
  if (j.contains("data")) e.data = j["data"];
  return e;
}

}  // namespace sentinel::metrics
