#pragma once

#include <cmath>
#include <numbers>

namespace sentinel::docking {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Angle in (-pi, pi].
inline double normalize_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  if (a > kPi) a -= kTwoPi;
  return a;
}

/// Angle in [0, 2pi).
inline double mod2pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

inline double angle_diff(double a, double b) { return normalize_angle(a - b); }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  Vec2 unit() const {
    const double n = norm();
    return {x / n, y / n};
  }
  bool operator==(const Vec2&) const = default;
};

inline Vec2 heading_vector(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Planar pose; theta is kept in (-pi, pi].
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2D() = default;
  Pose2D(double x_, double y_, double theta_) : x(x_), y(y_), theta(normalize_angle(theta_)) {}

  Vec2 position() const { return {x, y}; }

  /// Compose: `local` expressed in this frame, returned in the parent frame.
  Pose2D compose(const Pose2D& local) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {x + c * local.x - s * local.y, y + s * local.x + c * local.y, theta + local.theta};
  }

  /// This pose expressed relative to `frame`.
  Pose2D relative_to(const Pose2D& frame) const {
    const double c = std::cos(frame.theta), s = std::sin(frame.theta);
    const double dx = x - frame.x, dy = y - frame.y;
    return {c * dx + s * dy, -s * dx + c * dy, theta - frame.theta};
  }

  Pose2D inverse() const { return Pose2D{}.relative_to(*this); }

  Vec2 transform(Vec2 local) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {x + c * local.x - s * local.y, y + s * local.x + c * local.y};
  }
  Vec2 to_local(Vec2 world) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double dx = world.x - x, dy = world.y - y;
    return {c * dx + s * dy, -s * dx + c * dy};
  }
};

inline double distance(const Pose2D& a, const Pose2D& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace sentinel::docking
