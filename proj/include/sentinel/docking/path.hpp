#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "sentinel/docking/geometry.hpp"

namespace sentinel::docking {

enum class SegmentType : std::uint8_t { ArcLeft, ArcRight, Straight };

constexpr char to_char(SegmentType t) {
  switch (t) {
    case SegmentType::ArcLeft: return 'L';
    case SegmentType::ArcRight: return 'R';
    case SegmentType::Straight: return 'S';
  }
  return '?';
}

struct PathSegment {
  SegmentType type = SegmentType::Straight;
  double length = 0.0;  // metres along the path
  double radius = 0.0;  // arcs only
};

/// Advance `pose` along one segment by `s` metres (exact, no discretization).
inline Pose2D advance(const Pose2D& pose, const PathSegment& seg, double s) {
  if (seg.type == SegmentType::Straight)
    return {pose.x + s * std::cos(pose.theta), pose.y + s * std::sin(pose.theta), pose.theta};
  const double sign = seg.type == SegmentType::ArcLeft ? 1.0 : -1.0;
  const double dphi = sign * s / seg.radius;
  const double th = pose.theta;
  return {pose.x + sign * seg.radius * (std::sin(th + dphi) - std::sin(th)),
          pose.y - sign * seg.radius * (std::cos(th + dphi) - std::cos(th)), th + dphi};
}

/// Forward-only path made of arcs and straights, parameterized by arc length.
struct Path {
  Pose2D start;
  std::vector<PathSegment> segments;

  double length() const {
    double total = 0.0;
    for (const auto& s : segments) total += s.length;
    return total;
  }

  /// Pose at arc length s; beyond either end the path is extended by a straight
  /// line along the end heading, which keeps lookahead well defined.
  Pose2D pose_at(double s) const {
    Pose2D p = start;
    if (s <= 0.0) return advance(p, {SegmentType::Straight, 0.0, 0.0}, s);
    for (const auto& seg : segments) {
      if (s <= seg.length) return advance(p, seg, s);
      p = advance(p, seg, seg.length);
      s -= seg.length;
    }
    return advance(p, {SegmentType::Straight, 0.0, 0.0}, s);
  }

  Pose2D end() const {
    Pose2D p = start;
    for (const auto& seg : segments) p = advance(p, seg, seg.length);
    return p;
  }

  /// Polyline with vertices at most `step` apart, for plotting.
  std::vector<Pose2D> polyline(double step) const {
    std::vector<Pose2D> out;
    const double total = length();
    const int n = std::max(1, static_cast<int>(std::ceil(total / step)));
    for (int i = 0; i <= n; ++i) out.push_back(pose_at(total * i / n));
    return out;
  }
};

}  // namespace sentinel::docking
