#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>

#include "sentinel/core/error.hpp"
#include "sentinel/core/time.hpp"
#include "sentinel/monitor/report.hpp"

namespace sentinel::monitor {

/// Arrival timestamps of one channel, newest last.
class RateWindow {
 public:
  RateWindow(std::size_t capacity, double nominal_hz) : capacity_(capacity), nominal_hz_(nominal_hz) {
    if (capacity < 2) throw Error("rate window capacity must be >= 2");
    if (!(nominal_hz > 0.0)) throw Error("nominal rate must be positive");
  }

  /// Timestamps must be strictly increasing; a duplicate or older arrival is
  /// rejected and returns false.
  bool push(Nanos t) {
    if (!arrivals_.empty() && t <= arrivals_.back()) return false;
    arrivals_.push_back(t);
    if (arrivals_.size() > capacity_) arrivals_.pop_front();
    return true;
  }

  /// Forget arrivals older than `cutoff` so a channel that fell silent drains.
  void prune_before(Nanos cutoff) {
    while (!arrivals_.empty() && arrivals_.front() < cutoff) arrivals_.pop_front();
  }

  void clear() { arrivals_.clear(); }

  std::size_t size() const { return arrivals_.size(); }
  std::size_t capacity() const { return capacity_; }
  double nominal_hz() const { return nominal_hz_; }
  Nanos first() const { return arrivals_.front(); }
  Nanos last() const { return arrivals_.back(); }

 private:
  std::size_t capacity_;
  double nominal_hz_;
  std::deque<Nanos> arrivals_;
};

/// (count - 1) / span. Empty when fewer than two arrivals are held.
inline std::optional<double> measure_rate(const RateWindow& window) {
  if (window.size() < 2) return std::nullopt;
  const double span = to_seconds(window.last() - window.first());
  return static_cast<double>(window.size() - 1) / span;
}

inline MonitorReport rate_report(const RateWindow& window, const Band& band, std::string monitor_id,
                                 std::string entity_id, Nanos now) {
  MonitorReport r{std::move(monitor_id), std::move(entity_id), 0.0, Unit::Hertz,
                  MonitorLevel::Stale, now, "insufficient arrivals"};
  if (auto hz = measure_rate(window)) {
    auto c = classify_detailed(*hz, band);
    r.value = *hz;
    r.level = c.level;
    r.message = std::move(c.message);
  }
  return r;
}

}  // namespace sentinel::monitor
