#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "sentinel/core/error.hpp"

namespace sentinel::bt {

enum class TickStatus : std::uint8_t { Success, Failure, Running };

constexpr std::string_view to_string(TickStatus s) {
  switch (s) {
    case TickStatus::Success: return "SUCCESS";
    case TickStatus::Failure: return "FAILURE";
    case TickStatus::Running: return "RUNNING";
  }
  return "?";
}

enum class RecoveryId : std::uint8_t {
  RestartNode,
  Wait,
  MoveBack,
  RotateSlow,
  RestartLocalization,
  RequestSupervisor,
  ResyncClock,
  SwitchConfiguration,
};

inline constexpr RecoveryId kAllRecoveries[] = {
    RecoveryId::RestartNode,        RecoveryId::Wait,
    RecoveryId::MoveBack,           RecoveryId::RotateSlow,
    RecoveryId::RestartLocalization, RecoveryId::RequestSupervisor,
    RecoveryId::ResyncClock,        RecoveryId::SwitchConfiguration,
};

constexpr std::string_view to_string(RecoveryId id) {
  switch (id) {
    case RecoveryId::RestartNode: return "restart_node";
    case RecoveryId::Wait: return "wait";
    case RecoveryId::MoveBack: return "move_back";
    case RecoveryId::RotateSlow: return "rotate_slow";
    case RecoveryId::RestartLocalization: return "restart_localization";
    case RecoveryId::RequestSupervisor: return "request_supervisor";
    case RecoveryId::ResyncClock: return "resync_clock";
    case RecoveryId::SwitchConfiguration: return "switch_configuration";
  }
  return "?";
}

inline std::optional<RecoveryId> parse_recovery(std::string_view s) {
  for (auto id : kAllRecoveries)
    if (to_string(id) == s) return id;
  return std::nullopt;
}

struct RecoveryParams {
  double duration_s = 0.0;
  double distance_m = 0.0;
  double angular_rate = 0.0;  // rad/s
  std::string target_config;

  bool operator==(const RecoveryParams&) const = default;
};

/// One step of an escalation chain.
struct RecoveryAction {
  RecoveryId id = RecoveryId::Wait;
  RecoveryParams params;
  double cooldown_s = 10.0;
  int budget = 2;  // attempts per error episode

  void validate() const {
    if (params.duration_s < 0 || params.distance_m < 0 || params.angular_rate < 0 ||
        cooldown_s < 0)
      throw Error(std::string(to_string(id)) + ": parameters must be non-negative");
    if (budget < 1) throw Error(std::string(to_string(id)) + ": budget must be >= 1");
    switch (id) {
      case RecoveryId::Wait:
        if (params.duration_s <= 0) throw Error("wait: duration_s must be positive");
        break;
      case RecoveryId::MoveBack:
        if (params.distance_m <= 0) throw Error("move_back: distance_m must be positive");
        break;
      case RecoveryId::RotateSlow:
        if (params.angular_rate <= 0 || params.duration_s <= 0)
          throw Error("rotate_slow: angular_rate and duration_s must be positive");
        break;
      case RecoveryId::SwitchConfiguration:
        if (params.target_config.empty())
          throw Error("switch_configuration: target_config required");
        break;
      default:
        break;
    }
  }

  bool operator==(const RecoveryAction&) const = default;
};

inline RecoveryAction make_action(RecoveryId id) {
  RecoveryAction a;
  a.id = id;
  switch (id) {
    case RecoveryId::Wait: a.params.duration_s = 10.0; break;
    case RecoveryId::MoveBack: a.params.distance_m = 0.5; break;
    case RecoveryId::RotateSlow:
      a.params.duration_s = 20.0;
      a.params.angular_rate = 0.3;
      break;
    case RecoveryId::RequestSupervisor:
      a.budget = 1;
      a.cooldown_s = 0.0;
      break;
    default: break;
  }
  return a;
}

}  // namespace sentinel::bt
