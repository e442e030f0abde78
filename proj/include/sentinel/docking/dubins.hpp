#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>

#include "sentinel/core/error.hpp"
#include "sentinel/docking/path.hpp"

namespace sentinel::docking {

enum class DubinsWord : std::uint8_t { LSL, RSR, LSR, RSL, RLR, LRL, None };

inline constexpr std::array<DubinsWord, 6> kDubinsWords = {
    DubinsWord::LSL, DubinsWord::RSR, DubinsWord::LSR,
    DubinsWord::RSL, DubinsWord::RLR, DubinsWord::LRL};

constexpr std::string_view to_string(DubinsWord w) {
  switch (w) {
    case DubinsWord::LSL: return "LSL";
    case DubinsWord::RSR: return "RSR";
    case DubinsWord::LSR: return "LSR";
    case DubinsWord::RSL: return "RSL";
    case DubinsWord::RLR: return "RLR";
    case DubinsWord::LRL: return "LRL";
    case DubinsWord::None: return "none";
  }
  return "?";
}

constexpr std::array<SegmentType, 3> segment_types(DubinsWord w) {
  using enum SegmentType;
  switch (w) {
    case DubinsWord::LSL: return {ArcLeft, Straight, ArcLeft};
    case DubinsWord::RSR: return {ArcRight, Straight, ArcRight};
    case DubinsWord::LSR: return {ArcLeft, Straight, ArcRight};
    case DubinsWord::RSL: return {ArcRight, Straight, ArcLeft};
    case DubinsWord::RLR: return {ArcRight, ArcLeft, ArcRight};
    case DubinsWord::LRL: return {ArcLeft, ArcRight, ArcLeft};
    case DubinsWord::None: return {Straight, Straight, Straight};
  }
  return {Straight, Straight, Straight};
}

/// Shortest forward path with bounded curvature between two poses.
struct DubinsPath : Path {
  Pose2D goal;
  DubinsWord word = DubinsWord::None;
  double turn_radius = 0.0;
};

/// Normalized segment lengths (radians for arcs, multiples of the radius for
/// the straight) of one word, or nothing if the word cannot connect the poses.
/// `d` is the start-goal distance over the radius; alpha and beta are the start
/// and goal headings measured from the start->goal direction.
inline std::optional<std::array<double, 3>> dubins_word(DubinsWord w, double alpha, double beta, double d) {
  const double sa = std::sin(alpha), sb = std::sin(beta);
  const double ca = std::cos(alpha), cb = std::cos(beta);
  const double c_ab = std::cos(alpha - beta);
  switch (w) {
    case DubinsWord::LSL: {
      const double p2 = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sa - sb);
      if (p2 < 0) return std::nullopt;
      const double tmp = std::atan2(cb - ca, d + sa - sb);
      return std::array{mod2pi(tmp - alpha), std::sqrt(p2), mod2pi(beta - tmp)};
    }
    case DubinsWord::RSR: {
      const double p2 = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sb - sa);
      if (p2 < 0) return std::nullopt;
      const double tmp = std::atan2(ca - cb, d - sa + sb);
      return std::array{mod2pi(alpha - tmp), std::sqrt(p2), mod2pi(tmp - beta)};
    }
    case DubinsWord::LSR: {
      const double p2 = -2.0 + d * d + 2.0 * c_ab + 2.0 * d * (sa + sb);
      if (p2 < 0) return std::nullopt;
      const double p = std::sqrt(p2);
      const double tmp = std::atan2(-ca - cb, d + sa + sb) - std::atan2(-2.0, p);
      return std::array{mod2pi(tmp - alpha), p, mod2pi(tmp - beta)};
    }
    case DubinsWord::RSL: {
      const double p2 = -2.0 + d * d + 2.0 * c_ab - 2.0 * d * (sa + sb);
      if (p2 < 0) return std::nullopt;
      const double p = std::sqrt(p2);
      const double tmp = std::atan2(ca + cb, d - sa - sb) - std::atan2(2.0, p);
      return std::array{mod2pi(alpha - tmp), p, mod2pi(beta - tmp)};
    }
    case DubinsWord::RLR: {
      const double c = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0;
      if (std::abs(c) > 1.0) return std::nullopt;
      const double p = mod2pi(kTwoPi - std::acos(c));
      const double t = mod2pi(alpha - std::atan2(ca - cb, d - sa + sb) + p / 2.0);
      return std::array{t, p, mod2pi(alpha - beta - t + p)};
    }
    case DubinsWord::LRL: {
      const double c = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0;
      if (std::abs(c) > 1.0) return std::nullopt;
      const double p = mod2pi(kTwoPi - std::acos(c));
      const double t = mod2pi(-alpha - std::atan2(ca - cb, d + sa - sb) + p / 2.0);
      return std::array{t, p, mod2pi(beta - alpha - t + p)};
    }
    case DubinsWord::None: break;
  }
  return std::nullopt;
}

inline DubinsPath make_dubins_path(const Pose2D& start, const Pose2D& goal, double radius, DubinsWord w,
                                   const std::array<double, 3>& normalized) {
  DubinsPath path;
  path.start = start;
  path.goal = goal;
  path.word = w;
  path.turn_radius = radius;
  const auto types = segment_types(w);
  for (int i = 0; i < 3; ++i)
    path.segments.push_back({types[i], normalized[i] * radius,
                             types[i] == SegmentType::Straight ? 0.0 : radius});
  return path;
}

/// Shortest of the six canonical words. Identical start and goal give an
/// empty path.
inline DubinsPath plan_dubins(const Pose2D& start, const Pose2D& goal, double turn_radius) {
  if (!(turn_radius > 0.0)) throw Error("turn radius must be positive");
  const double dx = goal.x - start.x, dy = goal.y - start.y;
  const double dist = std::hypot(dx, dy);
  if (dist < 1e-12 && std::abs(angle_diff(goal.theta, start.theta)) < 1e-12) {
    DubinsPath p;
    p.start = start;
    p.goal = goal;
    p.turn_radius = turn_radius;
    return p;
  }
  const double d = dist / turn_radius;
  const double th = dist < 1e-12 ? 0.0 : mod2pi(std::atan2(dy, dx));
  const double alpha = mod2pi(start.theta - th);
  const double beta = mod2pi(goal.theta - th);

  double best = std::numeric_limits<double>::infinity();
  DubinsWord best_word = DubinsWord::None;
  std::array<double, 3> best_params{};
  for (DubinsWord w : kDubinsWords) {
    auto p = dubins_word(w, alpha, beta, d);
    if (!p) continue;
    const double len = (*p)[0] + (*p)[1] + (*p)[2];
    if (len < best) {
      best = len;
      best_word = w;
      best_params = *p;
    }
  }
  if (best_word == DubinsWord::None) throw Error("no Dubins word connects the poses");
  return make_dubins_path(start, goal, turn_radius, best_word, best_params);
}

}  // namespace sentinel::docking
