#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/bt/recovery.hpp"
#include "sentinel/docking/docking_sim.hpp"
#include "sentinel/gateway/session.hpp"
#include "sentinel/metrics/schedule.hpp"
#include "sentinel/orchestrator/config_io.hpp"
#include "sentinel/sim/topo_map.hpp"

namespace sentinel::sim {

enum class FaultKind : std::uint8_t {
  ProcessCrash,
  RateDegrade,
  ClockDrift,
  LocalizationLoss,
  NavigationBlock,
  DeadlockRestartLoop,
  DockingSlip,
  DockSignalLoss,
  ChargeContactLoss,
};

inline constexpr FaultKind kAllFaultKinds[] = {
    FaultKind::ProcessCrash,        FaultKind::RateDegrade,  FaultKind::ClockDrift,
    FaultKind::LocalizationLoss,    FaultKind::NavigationBlock, FaultKind::DeadlockRestartLoop,
    FaultKind::DockingSlip,         FaultKind::DockSignalLoss,  FaultKind::ChargeContactLoss,
};

constexpr std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::ProcessCrash: return "process_crash";
    case FaultKind::RateDegrade: return "rate_degrade";
    case FaultKind::ClockDrift: return "clock_drift";
    case FaultKind::LocalizationLoss: return "localization_loss";
    case FaultKind::NavigationBlock: return "navigation_block";
    case FaultKind::DeadlockRestartLoop: return "deadlock_restart_loop";
    case FaultKind::DockingSlip: return "docking_slip";
    case FaultKind::DockSignalLoss: return "dock_signal_loss";
    case FaultKind::ChargeContactLoss: return "charge_contact_loss";
  }
  return "?";
}

inline std::optional<FaultKind> parse_fault_kind(std::string_view s) {
  for (auto k : kAllFaultKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// One scripted fault. `magnitude` depends on the kind:
///   rate_degrade           remaining fraction of the nominal rate
///   clock_drift            skew growth in ms per second
///   deadlock_restart_loop  seconds from each restart to the next crash
///   docking_slip           unseen yaw-rate bias in rad/s
/// Localization and navigation faults end after `duration_s` or, when
/// `resolve_by` is set, when that recovery (or a supervisor) fixes them.
struct FaultSpec {
  Nanos time = 0;
  FaultKind kind = FaultKind::ProcessCrash;
  std::string target;
  double magnitude = 0.0;
  double duration_s = 0.0;
  std::optional<bt::RecoveryId> resolve_by;  // RequestSupervisor = a supervisor
  int line = 0;                              // source line, for diagnostics
};

struct BatteryModel {
  double capacity_h = 4.5;         // endurance while driving
  double idle_h = 12.0;            // endurance while standing undocked
  double charge_per_h = 0.3;       // fraction gained per hour on the dock
  double dock_threshold = 0.15;
  double critical = 0.05;
  double resume_level = 1.0;       // always enough to undock
  double resume_margin = 0.05;     // reserve above threshold when undocking mid-shift
  double min_session_s = 1800.0;   // do not undock for less duty time than this
  double initial = 1.0;

  double motion_rate() const { return 1.0 / (capacity_h * 3600.0); }  // per second
  double idle_rate() const { return 1.0 / (idle_h * 3600.0); }
  double charge_rate() const { return charge_per_h / 3600.0; }

  void validate() const {
    if (!(capacity_h > 0) || !(idle_h > 0) || !(charge_per_h > 0)) throw Error("battery rates must be positive");
    if (!(critical >= 0 && critical < dock_threshold && dock_threshold < 1))
      throw Error("battery needs 0 <= critical < dock_threshold < 1");
    if (!(resume_level > dock_threshold && resume_level <= 1)) throw Error("resume level must be in (threshold, 1]");
    if (!(initial >= 0 && initial <= 1)) throw Error("initial battery must be in [0, 1]");
    if (resume_margin < 0 || min_session_s < 0) throw Error("battery margins must be non-negative");
  }
};

struct RobotModel {
  double patrol_speed = 0.283;    // m/s
  double move_back_speed = 0.1;   // m/s
};

struct DockingModel {
  docking::DockingParams params;
  docking::TriangleLandmark landmark;
  double range_min = 1.0;
  double range_max = 3.0;
  double bearing_deg = 30.0;
  double heading_deg = 20.0;
  double switch_on_delay_s = 1800.0;  // emergency shutdown until someone switches it on

  void validate() const {
    landmark.validate();
    if (!(range_min > 0 && range_max >= range_min)) throw Error("docking range must satisfy 0 < min <= max");
    if (bearing_deg < 0 || heading_deg < 0) throw Error("docking cone angles must be non-negative");
    if (!(switch_on_delay_s > 0)) throw Error("switch-on delay must be positive");
  }
};

struct PeopleModel {
  double mask_per_h = 20.0;
  double no_mask_per_h = 2.0;
};

struct SupervisorModel {
  gateway::Roster roster{{"alice", ""}, {"bob", ""}, {"carol", ""}};
  double latency_min_s = 30.0;
  double latency_max_s = 180.0;
  double confirm_after_s = 20.0;
  double session_ttl_s = 900.0;
  std::string base_url = "http://localhost:8080";

  void validate() const {
    if (!(latency_min_s >= 0 && latency_max_s >= latency_min_s)) throw Error("supervisor latency must be 0 <= min <= max");
    if (!(session_ttl_s > 0)) throw Error("session ttl must be positive");
    if (confirm_after_s < 0) throw Error("confirm delay must be non-negative");
  }
};

/// Arbiter and launch setup used when a scenario does not bring its own.
inline constexpr std::string_view kDefaultConfigurations = R"(---
name: normal
entities:
  - {id: base}
  - {id: localization}
  - {id: navigation}
  - id: jetson_bridge
    outputs:
      - {channel: camera, rate_hz: 15, warn_fraction: 0.2, error_fraction: 0.5}
monitors:
  - {id: cpu/host, kind: cpu, entity: host, band: {direction: high-is-bad, warn: 80, error: 95}, unit: "%"}
  - {id: clock/skew, kind: clock_skew, entity: jetson, band: {direction: high-is-bad, warn: 50, error: 200}, unit: ms}
  - {id: loc/quality, kind: localization, entity: localization, band: {direction: low-is-bad, warn: 0.6, error: 0.3}}
  - {id: nav/blocked, kind: navigation, entity: navigation, band: {direction: high-is-bad, warn: 0.25, error: 0.5}, unit: flag}
arbiter:
  tick_period_s: 1
  storm: {window_s: 180, threshold: 10}
  classes:
    - name: node_down
      monitors: [alive/*]
      recoveries:
        - {action: restart_node, budget: 3, cooldown_s: 5}
        - {action: request_supervisor}
    - name: clock
      monitors: [clock/skew]
      recoveries:
        - {action: resync_clock, budget: 2, cooldown_s: 10}
    - name: localization
      monitors: [loc/quality]
      recoveries:
        - {action: rotate_slow, duration_s: 40, angular_rate: 0.3, budget: 1}
        - {action: restart_localization, budget: 1}
        - {action: request_supervisor}
    - name: navigation
      monitors: [nav/blocked]
      recoveries:
        - {action: wait, duration_s: 10, budget: 1}
        - {action: move_back, distance_m: 0.5, budget: 1}
        - {action: request_supervisor}
---
name: charging
entities:
  - {id: base}
  - id: jetson_bridge
    outputs:
      - {channel: camera, rate_hz: 15, warn_fraction: 0.2, error_fraction: 0.5}
  - {id: docking}
monitors:
  - {id: cpu/host, kind: cpu, entity: host, band: {direction: high-is-bad, warn: 80, error: 95}, unit: "%"}
  - {id: clock/skew, kind: clock_skew, entity: jetson, band: {direction: high-is-bad, warn: 50, error: 200}, unit: ms}
arbiter:
  tick_period_s: 1
  storm: {window_s: 180, threshold: 10}
  classes:
    - name: node_down
      monitors: [alive/*]
      recoveries:
        - {action: restart_node, budget: 3, cooldown_s: 5}
        - {action: request_supervisor}
    - name: clock
      monitors: [clock/skew]
      recoveries:
        - {action: resync_clock, budget: 2, cooldown_s: 10}
)";

inline std::vector<orchestrator::Configuration> default_configurations() {
  return orchestrator::load_configurations_text(std::string(kDefaultConfigurations), "<default configurations>");
}

struct Scenario {
  std::string name = "scenario";
  std::string note;
  std::uint64_t seed = 1;
  double horizon_days = 1.0;
  double dt_s = 1.0;
  metrics::DutySchedule schedule = metrics::DutySchedule::office_hours();
  TopoMap map = default_hallway_map();
  RobotModel robot;
  BatteryModel battery;
  DockingModel docking;
  PeopleModel people;
  SupervisorModel supervisors;
  std::vector<orchestrator::Configuration> configurations = default_configurations();
  std::string patrol_config = "normal";
  std::string charging_config = "charging";
  std::vector<FaultSpec> faults;

  Nanos horizon() const { return from_seconds(horizon_days * 86400.0); }
  Nanos dt() const { return from_seconds(dt_s); }

  const orchestrator::Configuration* configuration(const std::string& n) const {
    for (const auto& c : configurations)
      if (c.name == n) return &c;
    return nullptr;
  }

  std::set<std::string> entity_ids() const {
    std::set<std::string> out;
    for (const auto& c : configurations)
      for (const auto& e : c.entities) out.insert(e.id);
    return out;
  }

  std::set<std::string> channel_names() const {
    std::set<std::string> out;
    for (const auto& c : configurations)
      for (const auto& e : c.entities)
        for (const auto& ch : e.outputs) out.insert(ch.name);
    return out;
  }

  /// Throws Error naming the first problem; faults report their source line.
  void validate() const {
    if (!(horizon_days > 0)) throw Error("horizon must be positive");
    if (!(dt_s > 0)) throw Error("dt must be positive");
    if (!(robot.patrol_speed > 0) || !(robot.move_back_speed > 0)) throw Error("robot speeds must be positive");
    schedule.validate();
    map.validate();
    battery.validate();
    docking.validate();
    supervisors.validate();
    if (people.mask_per_h < 0 || people.no_mask_per_h < 0) throw Error("detection rates must be non-negative");
    if (!configuration(patrol_config)) throw Error("patrol configuration '" + patrol_config + "' is not declared");
    if (!configuration(charging_config)) throw Error("charging configuration '" + charging_config + "' is not declared");
    const auto entities = entity_ids();
    const auto channels = channel_names();
    for (const auto& f : faults) validate_fault(f, entities, channels);
  }

  void validate_fault(const FaultSpec& f, const std::set<std::string>& entities,
                      const std::set<std::string>& channels) const {
    const std::string where = "fault at line " + std::to_string(f.line) + " (" + std::string(to_string(f.kind)) + "): ";
    if (f.time < 0 || f.time >= horizon()) throw Error(where + "time outside the scenario horizon");
    if (f.duration_s < 0) throw Error(where + "duration must be non-negative");
    switch (f.kind) {
      case FaultKind::ProcessCrash:
      case FaultKind::DeadlockRestartLoop:
        if (!entities.contains(f.target)) throw Error(where + "unknown entity '" + f.target + "'");
        if (f.kind == FaultKind::DeadlockRestartLoop && !(f.duration_s > 0))
          throw Error(where + "duration must be positive");
        if (f.kind == FaultKind::DeadlockRestartLoop && f.magnitude < 0)
          throw Error(where + "crash delay must be non-negative");
        break;
      case FaultKind::RateDegrade:
        if (!channels.contains(f.target)) throw Error(where + "unknown channel '" + f.target + "'");
        if (!(f.magnitude >= 0 && f.magnitude < 1)) throw Error(where + "magnitude must be in [0, 1)");
        if (!(f.duration_s > 0)) throw Error(where + "duration must be positive");
        break;
      case FaultKind::ClockDrift:
        if (!(f.magnitude > 0)) throw Error(where + "drift must be positive");
        break;
      case FaultKind::LocalizationLoss:
      case FaultKind::NavigationBlock: {
        if (!(f.duration_s > 0) && !f.resolve_by) throw Error(where + "needs a duration or resolve_by");
        if (f.resolve_by) {
          const auto r = *f.resolve_by;
          const bool loc = r == bt::RecoveryId::RotateSlow || r == bt::RecoveryId::RestartLocalization;
          const bool nav = r == bt::RecoveryId::Wait || r == bt::RecoveryId::MoveBack;
          const bool ok = r == bt::RecoveryId::RequestSupervisor ||
                          (f.kind == FaultKind::LocalizationLoss ? loc : nav);
          if (!ok) throw Error(where + "cannot be resolved by " + std::string(bt::to_string(r)));
        }
        break;
      }
      case FaultKind::DockingSlip:
        if (!(f.duration_s > 0)) throw Error(where + "duration must be positive");
        break;
      case FaultKind::DockSignalLoss:
        if (!(f.duration_s > 0)) throw Error(where + "duration must be positive");
        break;
      case FaultKind::ChargeContactLoss:
        break;
    }
  }
};

}  // namespace sentinel::sim
