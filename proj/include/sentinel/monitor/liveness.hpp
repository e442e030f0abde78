#pragma once

#include <optional>
#include <string>

#include "sentinel/core/error.hpp"
#include "sentinel/core/time.hpp"
#include "sentinel/monitor/report.hpp"

namespace sentinel::monitor {

inline std::string liveness_monitor_id(const std::string& entity_id) { return "alive/" + entity_id; }

/// Error-only check: a heartbeat at most `timeout` old is OK.
inline MonitorReport check_liveness(const std::string& entity_id,
                                    std::optional<Nanos> last_heartbeat, Nanos now,
                                    Nanos timeout) {
  if (timeout <= 0) throw Error("liveness timeout must be positive");
  MonitorReport r{liveness_monitor_id(entity_id), entity_id, 0.0, Unit::Seconds,
                  MonitorLevel::Ok, now, ""};
  if (!last_heartbeat) {
    r.level = MonitorLevel::Error;
    r.message = "never responded";
    return r;
  }
  const Nanos silence = now - *last_heartbeat;
  r.value = to_seconds(silence);
  if (silence > timeout) {
    r.level = MonitorLevel::Error;
    r.message = "heartbeat timeout";
  }
  return r;
}

}  // namespace sentinel::monitor
