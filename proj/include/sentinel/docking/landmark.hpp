#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "sentinel/core/error.hpp"
#include "sentinel/docking/segments.hpp"

namespace sentinel::docking {

/// Wedge-shaped reflector: two sides meeting at an apex that points towards
/// the approaching robot. Its pose is the apex with heading along the outward
/// bisector.
struct TriangleLandmark {
  double apex_half_angle = 60.0 * kPi / 180.0;
  double side_length = 0.4;
  Pose2D dock_offset{0.45, 0.0, kPi};  // docked robot pose in the landmark frame

  void validate() const {
    if (!(apex_half_angle > 0.0 && apex_half_angle < kPi / 2))
      throw Error("apex half-angle must be in (0, pi/2)");
    if (!(side_length > 0.0)) throw Error("side length must be positive");
  }

  /// The two sides as world-frame segments for a landmark placed at `apex`.
  std::vector<WallSegment> sides(const Pose2D& apex) const {
    const Vec2 p = apex.position();
    const Vec2 s1 = p + heading_vector(apex.theta + kPi - apex_half_angle) * side_length;
    const Vec2 s2 = p + heading_vector(apex.theta + kPi + apex_half_angle) * side_length;
    return {{p, s1}, {p, s2}};
  }

  Pose2D dock_pose(const Pose2D& apex) const { return apex.compose(dock_offset); }
};

/// Landmark sides plus a wall behind it.
inline std::vector<WallSegment> docking_scene(const TriangleLandmark& lm, const Pose2D& apex,
                                              double wall_half_width = 1.5, double wall_clearance = 0.15) {
  auto scene = lm.sides(apex);
  const double back = lm.side_length * std::cos(lm.apex_half_angle) + wall_clearance;
  scene.push_back({apex.transform({-back, -wall_half_width}), apex.transform({-back, wall_half_width})});
  return scene;
}

struct DetectionTolerances {
  double angle = 5.0 * kPi / 180.0;  // on the interior angle
  double length = 0.06;              // on side length and apex/endpoint agreement
};

struct Detection {
  std::optional<Pose2D> pose;  // apex in the scan frame
  bool ambiguous = false;
  int candidates = 0;
};

inline std::optional<Vec2> intersect_lines(const LineSegment& s, const LineSegment& t) {
  const double denom = s.direction.cross(t.direction);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double u = (t.centroid - s.centroid).cross(t.direction) / denom;
  return s.centroid + s.direction * u;
}

/// Find the one segment pair that looks like the landmark seen from outside.
inline Detection detect_triangle(const std::vector<LineSegment>& segments, const TriangleLandmark& lm,
                                 const DetectionTolerances& tol = {}) {
  Detection result;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    for (std::size_t j = i + 1; j < segments.size(); ++j) {
      const auto& s = segments[i];
      const auto& t = segments[j];
      auto x = intersect_lines(s, t);
      if (!x) continue;
      const Vec2 apex = *x;
      const bool s_a_near = (s.a - apex).norm() < (s.b - apex).norm();
      const bool t_a_near = (t.a - apex).norm() < (t.b - apex).norm();
      const Vec2 s_near = s_a_near ? s.a : s.b, s_far = s_a_near ? s.b : s.a;
      const Vec2 t_near = t_a_near ? t.a : t.b, t_far = t_a_near ? t.b : t.a;
      if ((s_near - apex).norm() > tol.length || (t_near - apex).norm() > tol.length) continue;
      if (std::abs((s_far - apex).norm() - lm.side_length) > tol.length) continue;
      if (std::abs((t_far - apex).norm() - lm.side_length) > tol.length) continue;
      const Vec2 u = (s_far - apex).unit();
      const Vec2 v = (t_far - apex).unit();
      const double interior = std::acos(std::clamp(u.dot(v), -1.0, 1.0));
      if (std::abs(interior - 2.0 * lm.apex_half_angle) > tol.angle) continue;
      const Vec2 out = (u + v) * -1.0;
      // the sensor must be on the outward side, otherwise this is a concave corner
      if (out.dot(apex * -1.0) <= 0.0) continue;
      ++result.candidates;
      result.pose = Pose2D{apex.x, apex.y, std::atan2(out.y, out.x)};
    }
  }
  if (result.candidates > 1) {
    result.pose.reset();
    result.ambiguous = true;
  }
  return result;
}

/// Convenience: segment extraction followed by detection.
inline Detection detect_landmark(const Scan2D& scan, const TriangleLandmark& lm,
                                 const SplitMergeParams& sm = {}, const DetectionTolerances& tol = {}) {
  return detect_triangle(extract_segments(scan, sm), lm, tol);
}

}  // namespace sentinel::docking
