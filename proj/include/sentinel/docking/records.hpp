#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "sentinel/core/error.hpp"
#include "sentinel/docking/docking_sim.hpp"

namespace sentinel::docking {

/// Plain-text docking run. One directive per line, `#` starts a comment:
///
///   start 2.1 0.4 175       # x y theta_deg, landmark frame
///   landmark 60 0.4         # apex half-angle (deg), side length (m)
///   param speed 0.15        # any DockingParams scalar below
///   fault wheel_slip 0.02   # or detection_dropout <p>
///   seed 7
struct DockingRecord {
  Pose2D start;
  TriangleLandmark landmark;
  DockingParams params;
  DockingFault fault;
  std::uint64_t seed = 1;
};

namespace detail {

inline double* docking_param(DockingParams& p, const std::string& name) {
  if (name == "turn_radius") return &p.turn_radius;
  if (name == "lookahead") return &p.lookahead;
  if (name == "speed") return &p.speed;
  if (name == "goal_tolerance") return &p.goal_tolerance;
  if (name == "approach_distance") return &p.approach_distance;
  if (name == "dt") return &p.dt;
  if (name == "max_time_s") return &p.max_time_s;
  if (name == "max_omega") return &p.max_omega;
  if (name == "position_tolerance") return &p.position_tolerance;
  if (name == "noise_sigma") return &p.scanner.noise_sigma;
  return nullptr;
}

inline std::string strip_comment(std::string line) {
  if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
  return line;
}

}  // namespace detail

inline DockingRecord parse_docking_record(const std::string& text, const std::string& source = "<docking>") {
  DockingRecord r;
  bool have_start = false;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::istringstream ls(detail::strip_comment(raw));
    std::string key;
    if (!(ls >> key)) continue;
    auto fail = [&](const std::string& what) { throw ParseError(source, line_no, what); };
    auto done = [&] {
      std::string extra;
      if (ls >> extra) fail("unexpected '" + extra + "'");
    };
    if (key == "start") {
      double x, y, th;
      if (!(ls >> x >> y >> th)) fail("start needs: x y theta_deg");
      r.start = Pose2D(x, y, th * kPi / 180.0);
      have_start = true;
    } else if (key == "landmark") {
      double deg, side;
      if (!(ls >> deg >> side)) fail("landmark needs: half_angle_deg side_m");
      r.landmark.apex_half_angle = deg * kPi / 180.0;
      r.landmark.side_length = side;
    } else if (key == "param") {
      std::string name;
      double v;
      if (!(ls >> name >> v)) fail("param needs: name value");
      double* slot = detail::docking_param(r.params, name);
      if (!slot) fail("unknown param '" + name + "'");
      *slot = v;
    } else if (key == "fault") {
      std::string kind;
      double mag;
      if (!(ls >> kind >> mag)) fail("fault needs: kind magnitude");
      if (kind == "wheel_slip")
        r.fault = {DockingFaultKind::WheelSlip, mag};
      else if (kind == "detection_dropout")
        r.fault = {DockingFaultKind::DetectionDropout, mag};
      else
        fail("unknown fault '" + kind + "'");
    } else if (key == "seed") {
      if (!(ls >> r.seed)) fail("seed needs an unsigned integer");
    } else {
      fail("unknown directive '" + key + "'");
    }
    done();
  }
  if (!have_start) throw ParseError(source, line_no, "missing 'start'");
  try {
    r.landmark.validate();
  } catch (const Error& e) {
    throw ParseError(source, line_no, e.what());
  }
  return r;
}

inline DockingRecord load_docking_record(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_docking_record(ss.str(), path);
}

/// Scan fixture: one `angle_rad range_m` pair per line, `inf` for no return.
inline std::string format_scan(const Scan2D& scan) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "# max_range " << scan.max_range << "\n";
  for (const auto& p : scan.points) {
    out << p.angle << ' ';
    if (p.valid())
      out << p.range;
    else
      out << "inf";
    out << '\n';
  }
  return out.str();
}

inline Scan2D parse_scan(const std::string& text, const std::string& source = "<scan>") {
  Scan2D scan;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.rfind("# max_range", 0) == 0) {
      std::istringstream(raw.substr(11)) >> scan.max_range;
      continue;
    }
    std::istringstream ls(detail::strip_comment(raw));
    std::string a, r;
    if (!(ls >> a)) continue;
    if (!(ls >> r)) throw ParseError(source, line_no, "expected: angle range");
    try {
      ScanPoint p;
      p.angle = std::stod(a);
      p.range = r == "inf" ? kNoReturn : std::stod(r);
      scan.points.push_back(p);
    } catch (const std::exception&) {
      throw ParseError(source, line_no, "bad number");
    }
  }
  try {
    scan.validate();
  } catch (const Error& e) {
    throw ParseError(source, line_no, e.what());
  }
  return scan;
}

/// Trajectory as `x,y,theta` rows for plotting.
inline std::string format_polyline(const std::vector<Pose2D>& poses) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << "x,y,theta\n";
  for (const auto& p : poses) out << p.x << ',' << p.y << ',' << p.theta << '\n';
  return out.str();
}

}  // namespace sentinel::docking
