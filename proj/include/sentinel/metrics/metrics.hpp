#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sentinel/metrics/event.hpp"
#include "sentinel/metrics/schedule.hpp"

namespace sentinel::metrics {

struct RecoveryRule {
  Nanos window = 60 * kNanosPerSecond;
  double radius_m = 1.0;
};

struct RecoveryOutcome {
  std::size_t index = 0;  // position of the dispatch in the log
  Nanos t = 0;
  std::string action;
  std::string error_class;
  std::string category;
  bool success = false;
  bool missing_pose = false;
};

inline bool is_navigation(const Event& e) { return e.get<std::string>("category", "") == "navigation"; }

inline double planar_distance(const EventPose& a, const EventPose& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// A dispatch succeeds if no other dispatch follows within the window.
/// Navigation dispatches only count followers within `radius_m` of their own
/// pose; one without a pose is failed and flagged.
inline std::vector<RecoveryOutcome> classify_recoveries(const std::vector<Event>& log, const RecoveryRule& rule = {}) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < log.size(); ++i)
    if (log[i].kind == EventKind::ActionDispatch) idx.push_back(i);

  std::vector<RecoveryOutcome> out;
  out.reserve(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Event& e = log[idx[k]];
    RecoveryOutcome r;
    r.index = idx[k];
    r.t = e.t;
    r.action = e.get<std::string>("action", "");
    r.error_class = e.get<std::string>("error_class", "");
    r.category = e.get<std::string>("category", "");
    const bool nav = is_navigation(e);
    if (nav && !e.pose) {
      r.missing_pose = true;
      out.push_back(std::move(r));
      continue;
    }
    bool followed = false;
    for (std::size_t m = k + 1; m < idx.size() && !followed; ++m) {
      const Event& f = log[idx[m]];
      if (f.t <= e.t) continue;
      if (f.t > e.t + rule.window) break;
      followed = !nav || (f.pose && planar_distance(*e.pose, *f.pose) <= rule.radius_m);
    }
    r.success = !followed;
    out.push_back(std::move(r));
  }
  return out;
}

/// Mode in effect over time, from mode_change events. Before the first
/// change the robot is in that change's `from` mode.
struct ModeTimeline {
  struct Span {
    Nanos begin;
    Nanos end;
    std::string mode;
  };
  std::vector<Span> spans;

  static ModeTimeline build(const std::vector<Event>& log) {
    ModeTimeline tl;
    if (log.empty()) return tl;
    const Nanos t0 = log.front().t;
    const Nanos t1 = log.back().t;
    std::string mode;
    Nanos start = t0;
    bool seen = false;
    for (const auto& e : log) {
      if (e.kind != EventKind::ModeChange) continue;
      if (!seen) {
        mode = e.get<std::string>("from", "");
        seen = true;
      }
      if (e.t > start) tl.spans.push_back({start, e.t, mode});
      start = std::max(start, e.t);
      mode = e.get<std::string>("to", mode);
    }
    if (!seen) return tl;
    if (t1 > start) tl.spans.push_back({start, t1, mode});
    return tl;
  }

  std::vector<Interval> where(const std::function<bool(const std::string&)>& pred) const {
    std::vector<Interval> out;
    for (const auto& s : spans) {
      if (!pred(s.mode)) continue;
      if (!out.empty() && out.back().end == s.begin)
        out.back().end = s.end;
      else
        out.push_back({s.begin, s.end});
    }
    return out;
  }

  std::string at(Nanos t) const {
    for (const auto& s : spans)
      if (t >= s.begin && t < s.end) return s.mode;
    return spans.empty() ? std::string() : spans.back().mode;
  }
};

inline Nanos total_length(const std::vector<Interval>& v) {
  Nanos n = 0;
  for (const auto& i : v) n += i.length();
  return n;
}

inline bool is_unrequested_intervention(const Event& e) {
  return e.kind == EventKind::ManualIntervention && !e.get<bool>("requested", false);
}

/// System-on time (hours) between consecutive unrequested interventions and
/// the log boundaries.
inline std::vector<double> compute_tsl(const std::vector<Event>& log) {
  std::vector<double> out;
  if (log.empty()) return out;
  const auto off = ModeTimeline::build(log).where([](const std::string& m) { return m == "OFF"; });
  std::vector<Nanos> cuts{log.front().t};
  for (const auto& e : log)
    if (is_unrequested_intervention(e)) cuts.push_back(e.t);
  cuts.push_back(log.back().t);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const Interval seg{cuts[i], cuts[i + 1]};
    const Nanos on = seg.length() - overlap({seg}, off);
    out.push_back(to_hours(on));
  }
  return out;
}

struct DistanceMotion {
  double distance_m = 0.0;
  double undocked_h = 0.0;
  double motion_h = 0.0;
};

/// Motion is taken from odometry_delta records: each covers
/// [t - duration, t] at a commanded speed in a given mode.
inline bool is_motion(const Event& e) {
  if (e.kind != EventKind::OdometryDelta) return false;
  const auto mode = e.get<std::string>("mode", "");
  return e.get<double>("speed", 0.0) > 0.0 && (mode == "PATROL" || mode == "DOCKING");
}

inline Interval motion_interval(const Event& e) {
  return {e.t - from_seconds(e.get<double>("duration", 0.0)), e.t};
}

inline DistanceMotion compute_distance_and_motion(const std::vector<Event>& log) {
  DistanceMotion dm;
  Nanos motion = 0;
  for (const auto& e : log) {
    if (e.kind != EventKind::OdometryDelta) continue;
    dm.distance_m += e.get<double>("distance", 0.0);
    if (is_motion(e)) motion += motion_interval(e).length();
  }
  const auto undocked = ModeTimeline::build(log).where(
      [](const std::string& m) { return m != "CHARGING" && m != "OFF"; });
  dm.undocked_h = to_hours(total_length(undocked));
  dm.motion_h = to_hours(motion);
  return dm;
}

/// Patrol motion inside duty windows over duty time in the log horizon, in percent.
inline double compute_autonomy_percentage(const std::vector<Event>& log, const DutySchedule& schedule) {
  if (log.empty()) return 0.0;
  const auto duty = schedule.intervals(log.front().t, log.back().t);
  const Nanos duty_total = total_length(duty);
  if (duty_total == 0) return 0.0;
  std::vector<Interval> patrol;
  for (const auto& e : log)
    if (is_motion(e) && e.get<std::string>("mode", "") == "PATROL") patrol.push_back(motion_interval(e));
  std::sort(patrol.begin(), patrol.end(), [](auto& a, auto& b) { return a.begin < b.begin; });
  std::vector<Interval> merged;
  for (const auto& iv : patrol) {
    if (iv.length() <= 0) continue;
    if (!merged.empty() && iv.begin <= merged.back().end)
      merged.back().end = std::max(merged.back().end, iv.end);
    else
      merged.push_back(iv);
  }
  const double pct = 100.0 * static_cast<double>(overlap(merged, duty)) / static_cast<double>(duty_total);
  return std::clamp(pct, 0.0, 100.0);
}

}  // namespace sentinel::metrics
