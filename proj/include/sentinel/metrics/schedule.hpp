#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <utility>
#include <vector>

#include "sentinel/core/error.hpp"
#include "sentinel/core/time.hpp"

namespace sentinel::metrics {

struct Interval {
  Nanos begin = 0;
  Nanos end = 0;
  Nanos length() const { return end - begin; }
  bool operator==(const Interval&) const = default;
};

/// Total overlap of two sorted, disjoint interval lists.
inline Nanos overlap(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  Nanos total = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const Nanos lo = std::max(a[i].begin, b[j].begin);
    const Nanos hi = std::min(a[i].end, b[j].end);
    if (hi > lo) total += hi - lo;
    if (a[i].end < b[j].end) ++i; else ++j;
  }
  return total;
}

inline constexpr std::array<const char*, 7> kWeekdayNames = {"mon", "tue", "wed", "thu", "fri", "sat", "sun"};

/// Recurring daily window on a set of weekdays. Times are seconds after
/// midnight; day 0 of the timeline is `DutySchedule::epoch_weekday`.
struct DutyWindow {
  std::array<bool, 7> days{};  // index 0 = Monday
  double start_s = 9 * 3600.0;
  double end_s = 17 * 3600.0;
};

struct DutySchedule {
  std::vector<DutyWindow> windows;
  int epoch_weekday = 0;

  static DutySchedule office_hours() {
    DutySchedule s;
    DutyWindow w;
    for (int d = 0; d < 5; ++d) w.days[static_cast<std::size_t>(d)] = true;
    s.windows.push_back(w);
    return s;
  }

  void validate() const {
    if (epoch_weekday < 0 || epoch_weekday > 6) throw Error("epoch weekday must be in 0..6");
    for (const auto& w : windows)
      if (w.start_s < 0 || w.end_s > 86400.0 || w.start_s >= w.end_s)
        throw Error("duty window must satisfy 0 <= start < end <= 24h");
    for (int d = 0; d < 7; ++d) {
      std::vector<std::pair<double, double>> day;
      for (const auto& w : windows)
        if (w.days[static_cast<std::size_t>(d)]) day.emplace_back(w.start_s, w.end_s);
      std::sort(day.begin(), day.end());
      for (std::size_t i = 1; i < day.size(); ++i)
        if (day[i].first < day[i - 1].second)
          throw Error(std::string("overlapping duty windows on ") + kWeekdayNames[static_cast<std::size_t>(d)]);
    }
  }

  /// Duty intervals intersecting [t0, t1), clipped, sorted.
  std::vector<Interval> intervals(Nanos t0, Nanos t1) const {
    std::vector<Interval> out;
    if (t1 <= t0) return out;
    const Nanos first_day = t0 >= 0 ? t0 / kNanosPerDay : -((-t0 + kNanosPerDay - 1) / kNanosPerDay);
    for (Nanos day = first_day; day * kNanosPerDay < t1; ++day) {
      const int wd = static_cast<int>(((day + epoch_weekday) % 7 + 7) % 7);
      std::vector<Interval> today;
      for (const auto& w : windows) {
        if (!w.days[static_cast<std::size_t>(wd)]) continue;
        Interval iv{day * kNanosPerDay + from_seconds(w.start_s), day * kNanosPerDay + from_seconds(w.end_s)};
        iv.begin = std::max(iv.begin, t0);
        iv.end = std::min(iv.end, t1);
        if (iv.end > iv.begin) today.push_back(iv);
      }
      std::sort(today.begin(), today.end(), [](auto& a, auto& b) { return a.begin < b.begin; });
      out.insert(out.end(), today.begin(), today.end());
    }
    return out;
  }

  bool on_duty(Nanos t) const {
    auto iv = intervals(t, t + 1);
    return !iv.empty();
  }

  Nanos duty_time(Nanos t0, Nanos t1) const {
    Nanos total = 0;
    for (const auto& iv : intervals(t0, t1)) total += iv.length();
    return total;
  }
};

}  // namespace sentinel::metrics
