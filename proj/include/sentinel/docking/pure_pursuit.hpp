#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "sentinel/core/error.hpp"
#include "sentinel/docking/path.hpp"

namespace sentinel::docking {

struct PurePursuitState {
  double lookahead = 0.5;        // m
  double speed = 0.15;           // m/s
  double goal_tolerance = 0.005; // m
  double progress = 0.0;         // arc length of the last closest point

  void validate() const {
    if (!(lookahead > 0.0)) throw Error("lookahead must be positive");
    if (!(speed > 0.0)) throw Error("speed must be positive");
    if (!(goal_tolerance > 0.0)) throw Error("goal tolerance must be positive");
  }
};

struct PursuitCommand {
  double v = 0.0;
  double omega = 0.0;
  bool done = false;
  std::optional<std::string> failure;
  double closest_s = 0.0;
  double deviation = 0.0;  // distance to the closest path point
  Vec2 lookahead_point;
};

namespace detail {

/// Closest arc length in [lo, hi]: coarse scan then golden-section refinement.
inline double closest_arc_length(const Path& path, Vec2 p, double lo, double hi) {
  auto dist2 = [&](double s) {
    const Pose2D q = path.pose_at(s);
    return (q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y);
  };
  const double step = 0.01;
  const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / step)));
  double best_s = lo, best_d = dist2(lo);
  for (int i = 1; i <= n; ++i) {
    const double s = lo + (hi - lo) * i / n;
    const double d = dist2(s);
    if (d < best_d) {
      best_d = d;
      best_s = s;
    }
  }
  const double h = (hi - lo) / n;
  double a = std::max(lo, best_s - h), b = std::min(hi, best_s + h);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  for (int it = 0; it < 40; ++it) {
    if (dist2(c) < dist2(d)) b = d; else a = c;
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// One control step. `state.progress` is advanced so the closest-point search
/// never jumps back to an earlier part of a self-overlapping path.
inline PursuitCommand pure_pursuit_step(const Pose2D& pose, const Path& path, PurePursuitState& state) {
  state.validate();
  PursuitCommand cmd;
  const double total = path.length();
  const Vec2 p = pose.position();
  const Pose2D end = path.end();

  const double lo = std::clamp(state.progress, 0.0, total);
  const double hi = std::min(total, lo + 2.0 * state.lookahead);
  const double s = detail::closest_arc_length(path, p, lo, hi);
  const Pose2D closest = path.pose_at(s);
  cmd.closest_s = s;
  cmd.deviation = std::hypot(closest.x - p.x, closest.y - p.y);
  state.progress = s;

  const double to_end = (p - end.position()).norm();
  const bool passed_end = s >= total - 1e-9 && (p - end.position()).dot(heading_vector(end.theta)) >= 0.0;
  if (to_end <= state.goal_tolerance || passed_end) {
    cmd.done = true;
    return cmd;
  }
  if (cmd.deviation >= 5.0 * state.lookahead) {
    cmd.failure = "lost path";
    return cmd;
  }

  const Pose2D target = path.pose_at(s + state.lookahead);
  cmd.lookahead_point = target.position();
  const Vec2 local = pose.to_local(target.position());
  cmd.v = state.speed;
  cmd.omega = state.speed * 2.0 * local.y / (state.lookahead * state.lookahead);
  return cmd;
}

}  // namespace sentinel::docking
