#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>

namespace sentinel {

/// Monotonic nanoseconds. All core logic reads time through a Clock so the
/// same code runs against wall time (daemon) and virtual time (simulator).
using Nanos = std::int64_t;

inline constexpr Nanos kNanosPerSecond = 1'000'000'000;
inline constexpr Nanos kNanosPerHour = 3600 * kNanosPerSecond;
inline constexpr Nanos kNanosPerDay = 24 * kNanosPerHour;

constexpr Nanos from_seconds(double s) {
  return static_cast<Nanos>(s * 1e9 + (s >= 0 ? 0.5 : -0.5));
}
constexpr double to_seconds(Nanos ns) { return static_cast<double>(ns) / 1e9; }
constexpr double to_hours(Nanos ns) { return static_cast<double>(ns) / 3.6e12; }

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Nanos now() const = 0;
};

class ManualClock final : public Clock {
 public:
  explicit ManualClock(Nanos start = 0) : now_(start) {}
  Nanos now() const override { return now_.load(); }
  void set(Nanos t) { now_.store(t); }
  void advance(Nanos dt) { now_.fetch_add(dt); }

 private:
  std::atomic<Nanos> now_;
};

class SteadyClock final : public Clock {
 public:
  Nanos now() const override {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }
};

}  // namespace sentinel
