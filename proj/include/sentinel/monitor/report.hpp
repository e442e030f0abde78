#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "sentinel/core/time.hpp"
#include "sentinel/monitor/level.hpp"

namespace sentinel::monitor {

enum class Unit : std::uint8_t { None, Percent, BytesPerSecond, Milliseconds, Hertz, Seconds, Flag };

constexpr std::string_view to_string(Unit u) {
  switch (u) {
    case Unit::None: return "";
    case Unit::Percent: return "%";
    case Unit::BytesPerSecond: return "B/s";
    case Unit::Milliseconds: return "ms";
    case Unit::Hertz: return "Hz";
    case Unit::Seconds: return "s";
    case Unit::Flag: return "flag";
  }
  return "";
}

inline std::optional<Unit> parse_unit(std::string_view s) {
  for (Unit u : {Unit::None, Unit::Percent, Unit::BytesPerSecond, Unit::Milliseconds,
                 Unit::Hertz, Unit::Seconds, Unit::Flag}) {
    if (to_string(u) == s) return u;
  }
  return std::nullopt;
}

/// One sampled health signal. Immutable once published.
struct MonitorReport {
  std::string monitor_id;
  std::string entity_id;
  double value = 0.0;
  Unit unit = Unit::None;
  MonitorLevel level = MonitorLevel::Ok;
  Nanos timestamp = 0;
  std::string message;

  bool operator==(const MonitorReport&) const = default;
};

}  // namespace sentinel::monitor
