#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "sentinel/core/error.hpp"
#include "sentinel/core/rng.hpp"
#include "sentinel/docking/geometry.hpp"

namespace sentinel::docking {

inline constexpr double kNoReturn = std::numeric_limits<double>::infinity();

struct ScanPoint {
  double angle = 0.0;  // rad, sensor frame
  double range = kNoReturn;

  bool valid() const { return std::isfinite(range); }
  Vec2 point() const { return {range * std::cos(angle), range * std::sin(angle)}; }
};

/// One sweep of a planar range sensor.
struct Scan2D {
  std::vector<ScanPoint> points;
  double max_range = 10.0;
  double noise_sigma = 0.0;

  double angle_min() const { return points.empty() ? 0.0 : points.front().angle; }
  double angle_max() const { return points.empty() ? 0.0 : points.back().angle; }

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (i > 0 && !(points[i].angle > points[i - 1].angle)) throw Error("scan angles must be strictly increasing");
      const double r = points[i].range;
      if (std::isfinite(r) && (!(r > 0.0) || r > max_range)) throw Error("scan range out of (0, max_range]");
    }
  }
};

struct ScannerModel {
  double angle_min = -135.0 * kPi / 180.0;
  double angle_max = 135.0 * kPi / 180.0;
  double resolution = 0.25 * kPi / 180.0;
  double max_range = 10.0;
  double noise_sigma = 0.0;
};

struct WallSegment {
  Vec2 a;
  Vec2 b;
};

/// Distance along the ray to the segment, or +inf.
inline double ray_hit(Vec2 origin, Vec2 dir, const WallSegment& w) {
  const Vec2 e = w.b - w.a;
  const double denom = dir.cross(e);
  if (std::abs(denom) < 1e-15) return kNoReturn;
  const Vec2 d = w.a - origin;
  const double t = d.cross(e) / denom;
  const double u = d.cross(dir) / denom;
  if (t <= 1e-12 || u < 0.0 || u > 1.0) return kNoReturn;
  return t;
}

/// Ray-cast `scene` (world frame) from `sensor`. Noise is additive Gaussian on range.
inline Scan2D synthesize_scan(const Pose2D& sensor, const std::vector<WallSegment>& scene,
                              const ScannerModel& model, Rng* rng = nullptr) {
  Scan2D scan;
  scan.max_range = model.max_range;
  scan.noise_sigma = model.noise_sigma;
  const int n = static_cast<int>(std::floor((model.angle_max - model.angle_min) / model.resolution + 1e-9)) + 1;
  scan.points.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = model.angle_min + i * model.resolution;
    const Vec2 dir = heading_vector(sensor.theta + a);
    double best = kNoReturn;
    for (const auto& w : scene) best = std::min(best, ray_hit(sensor.position(), dir, w));
    if (std::isfinite(best) && rng && model.noise_sigma > 0.0) best += model.noise_sigma * rng->normal();
    if (!(best > 0.0) || best > model.max_range) best = kNoReturn;
    scan.points.push_back({a, best});
  }
  return scan;
}

}  // namespace sentinel::docking
