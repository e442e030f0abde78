#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/core/rng.hpp"
#include "sentinel/docking/dubins.hpp"
#include "sentinel/docking/landmark.hpp"
#include "sentinel/docking/pure_pursuit.hpp"

namespace sentinel::docking {

struct DockingParams {
  double turn_radius = 0.3;
  double lookahead = 0.5;
  double speed = 0.15;
  double goal_tolerance = 0.005;
  double approach_distance = 1.5;  // straight final leg in front of the dock
  double dt = 0.05;
  double max_time_s = 240.0;
  double max_omega = 1.5;
  double position_tolerance = 0.02;
  double heading_tolerance = 3.0 * kPi / 180.0;
  int detection_scans = 5;
  ScannerModel scanner{.noise_sigma = 0.005};
  SplitMergeParams split_merge{.split_threshold = 0.03};
  DetectionTolerances detection;
};

enum class DockingFaultKind : std::uint8_t { None, DetectionDropout, WheelSlip };

constexpr std::string_view to_string(DockingFaultKind k) {
  switch (k) {
    case DockingFaultKind::None: return "none";
    case DockingFaultKind::DetectionDropout: return "detection_dropout";
    case DockingFaultKind::WheelSlip: return "wheel_slip";
  }
  return "none";
}

/// DetectionDropout: probability in [0, 1] that a scan yields no detection.
/// WheelSlip: yaw-rate bias in rad/s that odometry does not see.
struct DockingFault {
  DockingFaultKind kind = DockingFaultKind::None;
  double magnitude = 0.0;
};

struct DockingOutcome {
  bool docked = false;
  std::string reason;  // empty when docked
  Pose2D final_pose;   // ground truth
  double position_error = 0.0;
  double heading_error = 0.0;
  double duration_s = 0.0;
  double distance_m = 0.0;
  DubinsWord word = DubinsWord::None;
  double path_length = 0.0;
  std::vector<Pose2D> trajectory;
  DubinsPath planned;  // in the odometry frame
};

/// Exact unicycle integration over dt.
inline Pose2D integrate_unicycle(const Pose2D& p, double v, double omega, double dt) {
  if (std::abs(omega) < 1e-12) return {p.x + v * dt * std::cos(p.theta), p.y + v * dt * std::sin(p.theta), p.theta};
  const double r = v / omega;
  const double th = p.theta + omega * dt;
  return {p.x + r * (std::sin(th) - std::sin(p.theta)), p.y - r * (std::cos(th) - std::cos(p.theta)), th};
}

/// Mean of poses with a circular mean for heading.
inline Pose2D mean_pose(const std::vector<Pose2D>& poses) {
  double x = 0, y = 0, c = 0, s = 0;
  for (const auto& p : poses) {
    x += p.x;
    y += p.y;
    c += std::cos(p.theta);
    s += std::sin(p.theta);
  }
  const double n = static_cast<double>(poses.size());
  return {x / n, y / n, std::atan2(s, c)};
}

/// The landmark apex sits at the world origin facing +x. The robot starts at
/// `initial` with odometry equal to ground truth, detects, plans once to a
/// pre-dock pose plus a straight approach, and tracks the plan on odometry.
inline DockingOutcome simulate_docking(const Pose2D& initial, const TriangleLandmark& landmark,
                                       const DockingParams& params = {}, const DockingFault& fault = {},
                                       std::uint64_t seed = 1, bool record_trajectory = false) {
  landmark.validate();
  DockingOutcome outcome;
  Rng rng(seed);
  const Pose2D apex_world{0.0, 0.0, 0.0};
  const auto scene = docking_scene(landmark, apex_world);
  const Pose2D dock_truth = landmark.dock_pose(apex_world);

  Pose2D truth = initial;
  Pose2D odom = initial;
  outcome.final_pose = truth;
  auto finish = [&](std::string reason) {
    outcome.final_pose = truth;
    outcome.position_error = distance(truth, dock_truth);
    outcome.heading_error = std::abs(angle_diff(truth.theta, dock_truth.theta));
    outcome.reason = std::move(reason);
    outcome.docked = outcome.reason.empty();
    return outcome;
  };

  std::vector<Pose2D> detections;
  for (int i = 0; i < params.detection_scans; ++i) {
    const Scan2D scan = synthesize_scan(truth, scene, params.scanner, &rng);
    const bool dropped = fault.kind == DockingFaultKind::DetectionDropout && rng.uniform() < fault.magnitude;
    if (dropped) continue;
    auto det = detect_landmark(scan, landmark, params.split_merge, params.detection);
    if (det.pose) detections.push_back(odom.compose(*det.pose));
  }
  if (detections.empty()) return finish("no landmark");

  const Pose2D apex_est = mean_pose(detections);
  const Pose2D dock = landmark.dock_pose(apex_est);
  const Pose2D pre_dock = dock.compose({-params.approach_distance, 0.0, 0.0});
  DubinsPath plan = plan_dubins(odom, pre_dock, params.turn_radius);
  outcome.word = plan.word;
  Path path = plan;
  path.segments.push_back({SegmentType::Straight, params.approach_distance, 0.0});
  outcome.planned = plan;
  outcome.path_length = path.length();

  PurePursuitState pp{params.lookahead, params.speed, params.goal_tolerance, 0.0};
  const double slip = fault.kind == DockingFaultKind::WheelSlip ? fault.magnitude : 0.0;
  if (record_trajectory) outcome.trajectory.push_back(truth);
  for (double t = 0.0; t < params.max_time_s; t += params.dt) {
    const auto cmd = pure_pursuit_step(odom, path, pp);
    if (cmd.failure) return finish(*cmd.failure);
    if (cmd.done) {
      if (distance(truth, dock_truth) < params.position_tolerance &&
          std::abs(angle_diff(truth.theta, dock_truth.theta)) < params.heading_tolerance)
        return finish("");
      return finish("misaligned at dock");
    }
    const double omega = std::clamp(cmd.omega, -params.max_omega, params.max_omega);
    odom = integrate_unicycle(odom, cmd.v, omega, params.dt);
    truth = integrate_unicycle(truth, cmd.v, omega + slip, params.dt);
    outcome.duration_s = t + params.dt;
    outcome.distance_m += cmd.v * params.dt;
    if (record_trajectory) outcome.trajectory.push_back(truth);
  }
  return finish("timeout");
}

/// Initial pose in the frontal cone: `range` metres from the dock along a
/// bearing off the landmark axis, facing the dock with a heading offset.
inline Pose2D frontal_pose(const TriangleLandmark& lm, double range, double bearing, double heading_offset) {
  const Pose2D dock = lm.dock_pose({0, 0, 0});
  const Vec2 p = dock.position() + heading_vector(bearing) * range;
  const Vec2 to_dock = dock.position() - p;
  return {p.x, p.y, std::atan2(to_dock.y, to_dock.x) + heading_offset};
}

}  // namespace sentinel::docking
