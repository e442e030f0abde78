#pragma once

#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "sentinel/metrics/metrics.hpp"

namespace sentinel::metrics {

struct RecoveryStats {
  int dispatched = 0;
  int succeeded = 0;
  double rate() const { return dispatched ? 100.0 * succeeded / dispatched : 0.0; }
};

struct MetricsReport {
  double distance_m = 0.0;
  double undocked_h = 0.0;
  double motion_h = 0.0;
  double autonomy_pct = 0.0;
  std::vector<double> tsl_h;
  double tsl_min_h = 0.0;
  double tsl_mean_h = 0.0;
  double tsl_max_h = 0.0;
  std::map<std::string, RecoveryStats> recoveries;  // by action
  int recoveries_missing_pose = 0;
  int docking_attempts = 0;
  int docking_successes = 0;
  int supervisor_requests = 0;
  int requested_interventions = 0;
  int unplanned_interventions = 0;
  long long detections_mask = 0;
  long long detections_no_mask = 0;
  double horizon_h = 0.0;
  double duty_h = 0.0;

  RecoveryStats recovery(const std::string& action) const {
    auto it = recoveries.find(action);
    return it == recoveries.end() ? RecoveryStats{} : it->second;
  }
};

inline MetricsReport report(const std::vector<Event>& log, const DutySchedule& schedule,
                            const RecoveryRule& rule = {}) {
  MetricsReport r;
  if (log.empty()) return r;
  r.horizon_h = to_hours(log.back().t - log.front().t);
  r.duty_h = to_hours(schedule.duty_time(log.front().t, log.back().t));
  const auto dm = compute_distance_and_motion(log);
  r.distance_m = dm.distance_m;
  r.undocked_h = dm.undocked_h;
  r.motion_h = dm.motion_h;
  r.autonomy_pct = compute_autonomy_percentage(log, schedule);
  r.tsl_h = compute_tsl(log);
  if (!r.tsl_h.empty()) {
    r.tsl_min_h = *std::min_element(r.tsl_h.begin(), r.tsl_h.end());
    r.tsl_max_h = *std::max_element(r.tsl_h.begin(), r.tsl_h.end());
    r.tsl_mean_h = std::accumulate(r.tsl_h.begin(), r.tsl_h.end(), 0.0) / static_cast<double>(r.tsl_h.size());
  }
  for (const auto& o : classify_recoveries(log, rule)) {
    auto& s = r.recoveries[o.action];
    ++s.dispatched;
    if (o.success) ++s.succeeded;
    if (o.missing_pose) ++r.recoveries_missing_pose;
  }
  for (const auto& e : log) {
    switch (e.kind) {
      case EventKind::DockingAttempt:
        ++r.docking_attempts;
        if (e.get<bool>("success", false)) ++r.docking_successes;
        break;
      case EventKind::SupervisorRequest: ++r.supervisor_requests; break;
      case EventKind::ManualIntervention:
        if (e.get<bool>("requested", false))
          ++r.requested_interventions;
        else
          ++r.unplanned_interventions;
        break;
      case EventKind::DetectionCount:
        r.detections_mask += e.get<long long>("mask", 0);
        r.detections_no_mask += e.get<long long>("no_mask", 0);
        break;
      default: break;
    }
  }
  return r;
}

/// Structured form; key order and number formatting are fixed.
inline Payload to_json(const MetricsReport& r) {
  auto rd = [](double v) { return std::round(v * 1e4) / 1e4 + 0.0; };
  Payload j = Payload::object();
  j["distance_m"] = rd(r.distance_m);
  j["undocked_h"] = rd(r.undocked_h);
  j["motion_h"] = rd(r.motion_h);
  j["autonomy_pct"] = rd(r.autonomy_pct);
  j["horizon_h"] = rd(r.horizon_h);
  j["duty_h"] = rd(r.duty_h);
  Payload tsl = Payload::array();
  for (double t : r.tsl_h) tsl.push_back(rd(t));
  j["tsl_h"] = tsl;
  j["tsl_min_h"] = rd(r.tsl_min_h);
  j["tsl_mean_h"] = rd(r.tsl_mean_h);
  j["tsl_max_h"] = rd(r.tsl_max_h);
  Payload rec = Payload::object();
  for (const auto& [action, s] : r.recoveries)
    rec[action] = {{"dispatched", s.dispatched}, {"succeeded", s.succeeded}, {"success_rate_pct", rd(s.rate())}};
  j["recoveries"] = rec;
  j["recoveries_missing_pose"] = r.recoveries_missing_pose;
  j["docking"] = {{"attempts", r.docking_attempts}, {"successes", r.docking_successes}};
  j["supervisor_requests"] = r.supervisor_requests;
  j["requested_interventions"] = r.requested_interventions;
  j["unplanned_interventions"] = r.unplanned_interventions;
  j["detections"] = {{"mask", r.detections_mask}, {"no_mask", r.detections_no_mask}};
  return j;
}

inline std::string to_machine(const MetricsReport& r) { return to_json(r).dump(2) + "\n"; }

inline std::string to_table(const MetricsReport& r) {
  std::string out;
  auto row = [&](const std::string& k, const std::string& v) { out += fmt::format("  {:<28}{:>14}\n", k, v); };
  out += "Long-term autonomy\n";
  row("Total distance", fmt::format("{:.1f} km", r.distance_m / 1000.0));
  row("Time undocked", fmt::format("{:.1f} h", r.undocked_h));
  row("Time in motion", fmt::format("{:.1f} h", r.motion_h));
  row("A%", fmt::format("{:.1f} %", r.autonomy_pct));
  row("TSL min / mean / max",
      fmt::format("{:.1f}/{:.1f}/{:.1f} h", r.tsl_min_h, r.tsl_mean_h, r.tsl_max_h));
  std::string tsl;
  for (std::size_t i = 0; i < r.tsl_h.size(); ++i) tsl += (i ? ", " : "") + fmt::format("{:.1f}", r.tsl_h[i]);
  row("TSL values (h)", tsl.empty() ? "-" : tsl);
  row("Detections mask", std::to_string(r.detections_mask));
  row("Detections no mask", std::to_string(r.detections_no_mask));
  row("Docking attempts / successes", fmt::format("{} / {}", r.docking_attempts, r.docking_successes));
  row("Supervisor requests", std::to_string(r.supervisor_requests));
  row("Requested interventions", std::to_string(r.requested_interventions));
  row("Unplanned interventions", std::to_string(r.unplanned_interventions));
  out += "\nRecovery behaviours\n";
  out += fmt::format("  {:<24}{:>10}{:>10}{:>10}\n", "Action", "Count", "Success", "Rate");
  for (const auto& [action, s] : r.recoveries)
    out += fmt::format("  {:<24}{:>10}{:>10}{:>9.1f}%\n", action, s.dispatched, s.succeeded, s.rate());
  if (r.recoveries.empty()) out += "  (none)\n";
  if (r.recoveries_missing_pose)
    out += fmt::format("  {} navigation dispatch(es) lacked a pose and were counted as failed\n",
                       r.recoveries_missing_pose);
  return out;
}

}  // namespace sentinel::metrics
