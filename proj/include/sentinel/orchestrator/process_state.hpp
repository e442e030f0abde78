#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "sentinel/core/time.hpp"

namespace sentinel::orchestrator {

enum class ProcessState : std::uint8_t { Stopped, Starting, Running, Stopping, Failed };

constexpr std::string_view to_string(ProcessState s) {
  switch (s) {
    case ProcessState::Stopped: return "STOPPED";
    case ProcessState::Starting: return "STARTING";
    case ProcessState::Running: return "RUNNING";
    case ProcessState::Stopping: return "STOPPING";
    case ProcessState::Failed: return "FAILED";
  }
  return "?";
}

/// STOPPED -> STARTING -> RUNNING -> STOPPING -> STOPPED, anything -> FAILED.
/// A FAILED entity may be started again or marked stopped once reaped.
constexpr bool legal_transition(ProcessState from, ProcessState to) {
  using enum ProcessState;
  if (to == Failed) return true;
  switch (from) {
    case Stopped: return to == Starting;
    case Starting: return to == Running || to == Stopping;
    case Running: return to == Stopping;
    case Stopping: return to == Stopped;
    case Failed: return to == Starting || to == Stopped;
  }
  return false;
}

struct StateChange {
  std::string entity_id;
  ProcessState from = ProcessState::Stopped;
  ProcessState to = ProcessState::Stopped;
  Nanos time = 0;
  std::string note;

  bool operator==(const StateChange&) const = default;
};

}  // namespace sentinel::orchestrator
