#pragma once

#include <cmath>
#include <vector>

#include "sentinel/docking/scan.hpp"

namespace sentinel::docking {

/// Fitted line segment; endpoints are the first and last supporting points
/// projected onto the total-least-squares line.
struct LineSegment {
  Vec2 a;
  Vec2 b;
  Vec2 centroid;
  Vec2 direction;  // unit, from a towards b
  std::size_t first = 0;  // scan indices, inclusive
  std::size_t last = 0;
  std::size_t count = 0;
  double max_residual = 0.0;

  double length() const { return (b - a).norm(); }
  double distance_to_line(Vec2 p) const { return std::abs(direction.cross(p - centroid)); }
};

struct SplitMergeParams {
  double split_threshold = 0.02;  // m
  double gap_threshold = 0.10;    // consecutive points further apart start a new cluster
  std::size_t min_points = 4;
};

namespace detail {

struct Line {
  Vec2 centroid;
  Vec2 direction;
};

inline Line fit_line(const std::vector<Vec2>& pts, std::size_t i, std::size_t j) {
  const double n = static_cast<double>(j - i + 1);
  Vec2 c{};
  for (std::size_t k = i; k <= j; ++k) c = c + pts[k];
  c = c * (1.0 / n);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t k = i; k <= j; ++k) {
    const Vec2 d = pts[k] - c;
    sxx += d.x * d.x;
    syy += d.y * d.y;
    sxy += d.x * d.y;
  }
  const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  Vec2 dir = heading_vector(phi);
  if (dir.dot(pts[j] - pts[i]) < 0) dir = dir * -1.0;
  return {c, dir};
}

inline double line_distance(const Line& l, Vec2 p) { return std::abs(l.direction.cross(p - l.centroid)); }

inline void split(const std::vector<Vec2>& pts, std::size_t i, std::size_t j, double threshold,
                  std::vector<std::pair<std::size_t, std::size_t>>& out) {
  if (j - i < 2) {
    out.emplace_back(i, j);
    return;
  }
  const Vec2 chord = pts[j] - pts[i];
  const double len = chord.norm();
  std::size_t worst = i;
  double worst_d = -1.0;
  for (std::size_t k = i + 1; k < j; ++k) {
    const double d = len > 0 ? std::abs(chord.cross(pts[k] - pts[i])) / len : (pts[k] - pts[i]).norm();
    if (d > worst_d) {
      worst_d = d;
      worst = k;
    }
  }
  if (worst_d <= threshold) {
    out.emplace_back(i, j);
    return;
  }
  split(pts, i, worst, threshold, out);
  split(pts, worst, j, threshold, out);
}

inline double max_residual(const std::vector<Vec2>& pts, std::size_t i, std::size_t j) {
  const Line l = fit_line(pts, i, j);
  double r = 0;
  for (std::size_t k = i; k <= j; ++k) r = std::max(r, line_distance(l, pts[k]));
  return r;
}

/// Drop end points that sit off the line formed by the rest, e.g. a return
/// from a neighbouring surface that happened to fall inside the threshold.
inline void trim_ends(const std::vector<Vec2>& pts, std::size_t& i, std::size_t& j, std::size_t min_points) {
  auto rms = [&](std::size_t a, std::size_t b, const Line& l) {
    double sum = 0;
    for (std::size_t k = a; k <= b; ++k) sum += line_distance(l, pts[k]) * line_distance(l, pts[k]);
    return std::sqrt(sum / static_cast<double>(b - a + 1));
  };
  for (int budget = 0; budget < 6 && j - i + 1 > min_points; ++budget) {
    const Line without_first = fit_line(pts, i + 1, j);
    const Line without_last = fit_line(pts, i, j - 1);
    const double df = line_distance(without_first, pts[i]) - 3.0 * rms(i + 1, j, without_first);
    const double dl = line_distance(without_last, pts[j]) - 3.0 * rms(i, j - 1, without_last);
    if (df <= 1e-9 && dl <= 1e-9) return;
    if (df >= dl) ++i; else --j;
  }
}

}  // namespace detail

/// Split-and-merge over each cluster of consecutive returns.
inline std::vector<LineSegment> extract_segments(const Scan2D& scan, const SplitMergeParams& params = {}) {
  std::vector<LineSegment> out;
  std::vector<Vec2> pts;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < scan.points.size(); ++i)
    if (scan.points[i].valid()) {
      pts.push_back(scan.points[i].point());
      index.push_back(i);
    }
  if (pts.size() < 2) return out;

  std::size_t start = 0;
  for (std::size_t k = 1; k <= pts.size(); ++k) {
    const bool boundary = k == pts.size() || (pts[k] - pts[k - 1]).norm() > params.gap_threshold ||
                          index[k] != index[k - 1] + 1;
    if (!boundary) continue;
    const std::size_t end = k - 1;
    if (end > start) {
      std::vector<std::pair<std::size_t, std::size_t>> ranges;
      detail::split(pts, start, end, params.split_threshold, ranges);

      // Adjacent ranges share their split point; give it to the closer line.
      for (std::size_t r = 0; r + 1 < ranges.size(); ++r) {
        auto& left = ranges[r];
        auto& right = ranges[r + 1];
        if (left.second != right.first) continue;
        const std::size_t shared = left.second;
        const bool left_fit = left.second - left.first >= 2;
        const bool right_fit = right.second - right.first >= 2;
        double dl = 1e300, dr = 1e300;
        if (left_fit) dl = detail::line_distance(detail::fit_line(pts, left.first, shared - 1), pts[shared]);
        if (right_fit) dr = detail::line_distance(detail::fit_line(pts, shared + 1, right.second), pts[shared]);
        if (dl <= dr && left_fit) ++right.first;
        else if (right_fit) --left.second;
        else ++right.first;
      }

      // Merge neighbours that are one line after all.
      std::vector<std::pair<std::size_t, std::size_t>> merged;
      for (const auto& r : ranges) {
        if (r.first > r.second) continue;
        if (!merged.empty() && merged.back().second + 1 == r.first &&
            detail::max_residual(pts, merged.back().first, r.second) <= params.split_threshold)
          merged.back().second = r.second;
        else
          merged.push_back(r);
      }

      for (auto [i, j] : merged) {
        if (j - i + 1 < params.min_points) continue;
        detail::trim_ends(pts, i, j, params.min_points);
        const auto line = detail::fit_line(pts, i, j);
        LineSegment seg;
        seg.centroid = line.centroid;
        seg.direction = line.direction;
        seg.a = line.centroid + line.direction * line.direction.dot(pts[i] - line.centroid);
        seg.b = line.centroid + line.direction * line.direction.dot(pts[j] - line.centroid);
        seg.first = index[i];
        seg.last = index[j];
        seg.count = j - i + 1;
        seg.max_residual = detail::max_residual(pts, i, j);
        out.push_back(seg);
      }
    }
    start = k;
  }
  return out;
}

}  // namespace sentinel::docking
