#pragma once

#include <cstdlib>
#include <string>

#include "sentinel/core/error.hpp"
#include "sentinel/core/time.hpp"
#include "sentinel/monitor/report.hpp"

namespace sentinel::monitor {

/// Four timestamps of one request/response exchange. t0/t3 are read on the
/// requester clock, t1/t2 on the responder clock.
struct TimeExchange {
  Nanos t0 = 0;  // request sent
  Nanos t1 = 0;  // request received
  Nanos t2 = 0;  // response sent
  Nanos t3 = 0;  // response received
};

/// Responder clock minus requester clock; positive means the responder is ahead.
inline Nanos estimate_clock_offset(Nanos t0, Nanos t1, Nanos t2, Nanos t3) {
  if (t0 > t3 || t1 > t2) throw Error("non-causal timestamps");
  return ((t1 - t0) + (t2 - t3)) / 2;
}

inline Nanos estimate_clock_offset(const TimeExchange& x) {
  return estimate_clock_offset(x.t0, x.t1, x.t2, x.t3);
}

inline Nanos round_trip_delay(const TimeExchange& x) { return (x.t3 - x.t0) - (x.t2 - x.t1); }

/// Skew report in milliseconds, classified on the magnitude of the offset.
inline MonitorReport clock_skew_report(const TimeExchange& x, const Band& band,
                                       std::string monitor_id, std::string host, Nanos now) {
  MonitorReport r{std::move(monitor_id), std::move(host), 0.0, Unit::Milliseconds,
                  MonitorLevel::Error, now, ""};
  try {
    const Nanos offset = estimate_clock_offset(x);
    r.value = static_cast<double>(offset) / 1e6;
    auto c = classify_detailed(std::abs(r.value), band);
    r.level = c.level;
    r.message = std::move(c.message);
  } catch (const Error& e) {
    r.message = e.what();
  }
  return r;
}

}  // namespace sentinel::monitor
