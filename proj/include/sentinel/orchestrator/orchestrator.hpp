#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "sentinel/core/error.hpp"
#include "sentinel/core/time.hpp"
#include "sentinel/monitor/samplers.hpp"
#include "sentinel/orchestrator/configuration.hpp"
#include "sentinel/orchestrator/process_state.hpp"
#include "sentinel/orchestrator/runner.hpp"

namespace sentinel::orchestrator {

struct OrchestratorParams {
  Nanos graceful_stop = 5 * kNanosPerSecond;
  int restart_attempts = 2;
  std::filesystem::path scratch_root = std::filesystem::temp_directory_path() / "sentinel-scratch";
};

struct TransitionReport {
  std::string from;
  std::string to;
  std::vector<StateChange> changes;

  std::size_t count(ProcessState to_state) const {
    return static_cast<std::size_t>(std::count_if(
        changes.begin(), changes.end(), [&](const StateChange& c) { return c.to == to_state; }));
  }
  std::size_t stops() const { return count(ProcessState::Stopped); }
  std::size_t starts() const { return count(ProcessState::Running); }
  std::size_t failures() const { return count(ProcessState::Failed); }
};

struct RestartReport {
  std::string entity_id;
  ProcessState final_state = ProcessState::Stopped;
  int attempts = 0;
  std::vector<StateChange> changes;
};

/// Owns the configuration set and the lifecycle of every entity.
///
/// Commands (activate, switch, restart) are serialized. supervise() takes a
/// different lock and never waits on a command, so heartbeats keep flowing
/// while a restart is blocked inside the runner.
class Orchestrator {
 public:
  using SwitchHook = std::function<void(const Configuration&)>;
  using HookRunner = std::function<void(const std::string&)>;

  Orchestrator(std::vector<Configuration> configs, EntityRunner& runner, const Clock& clock,
               monitor::LivenessTracker& liveness, OrchestratorParams params = {})
      : runner_(&runner), clock_(&clock), liveness_(&liveness), params_(std::move(params)) {
    if (configs.empty()) throw Error("no configurations");
    for (auto& c : configs) {
      c.validate();
      const std::string name = c.name;
      if (!configs_.emplace(name, std::move(c)).second)
        throw Error("duplicate configuration '" + name + "'");
    }
    for (const auto& [name, c] : configs_)
      for (const auto& e : c.entities) states_.emplace(e.id, ProcessState::Stopped);
  }

  void on_switch(SwitchHook hook) { switch_hook_ = std::move(hook); }
  void set_hook_runner(HookRunner r) { hook_runner_ = std::move(r); }

  /// Bring up the first configuration.
  TransitionReport activate(const std::string& name) {
    std::lock_guard cmd(command_mutex_);
    if (!active_.empty()) throw Error("already active; use switch_configuration");
    const Configuration& to = lookup(name);
    TransitionReport report{"", name, {}};
    {
      std::lock_guard lock(state_mutex_);
      active_ = name;
    }
    if (switch_hook_) switch_hook_(to);
    run_hooks(to.entry_hooks);
    for (const auto& e : to.entities) launch(e, report.changes);
    return report;
  }

  /// Stop what `to` does not need, start what it adds, leave shared entities
  /// alone. A stop that fails is recorded as FAILED and the switch goes on.
  TransitionReport switch_configuration(const std::string& to_name) {
    std::lock_guard cmd(command_mutex_);
    if (active_.empty()) throw Error("no active configuration");
    const Configuration& from = lookup(active_);
    const Configuration& to = lookup(to_name);
    TransitionReport report{from.name, to.name, {}};
    if (from.name == to.name) return report;

    const auto keep = to.entity_ids();
    run_hooks(from.exit_hooks);
    for (const auto& e : from.entities)
      if (!keep.contains(e.id)) halt(e.id, report.changes);
    {
      std::lock_guard lock(state_mutex_);
      active_ = to.name;
    }
    if (switch_hook_) switch_hook_(to);
    const auto had = from.entity_ids();
    for (const auto& e : to.entities)
      if (!had.contains(e.id)) launch(e, report.changes);
    run_hooks(to.entry_hooks);
    return report;
  }

  /// Stop, wipe scratch state, start. Two failed launches leave it FAILED.
  RestartReport restart_entity(const std::string& id) {
    std::lock_guard cmd(command_mutex_);
    const Configuration& cfg = lookup(active_);
    const EntitySpec* spec = cfg.find(id);
    if (!spec) throw ConfigurationDrift("entity '" + id + "' is not declared in configuration '" + cfg.name + "'");
    RestartReport report{id, ProcessState::Stopped, 0, {}};
    halt(id, report.changes);
    for (int attempt = 1; attempt <= params_.restart_attempts; ++attempt) {
      report.attempts = attempt;
      if (launch(*spec, report.changes)) {
        report.final_state = ProcessState::Running;
        return report;
      }
    }
    report.final_state = ProcessState::Failed;
    return report;
  }

  /// Forward heartbeats of RUNNING entities and sample liveness. Entities in
  /// a deliberate transition are not checked.
  std::vector<monitor::MonitorReport> supervise() {
    const Nanos now = clock_->now();
    auto beats = runner_->heartbeats(now);
    std::lock_guard lock(state_mutex_);
    for (const auto& [id, t] : beats) {
      auto it = states_.find(id);
      if (it != states_.end() && it->second == ProcessState::Running) liveness_->heartbeat(id, t);
    }
    return liveness_->sample(now);
  }

  const Configuration& active() const {
    std::lock_guard lock(state_mutex_);
    return configs_.at(active_);
  }
  std::string active_name() const {
    std::lock_guard lock(state_mutex_);
    return active_;
  }
  const Configuration* configuration(const std::string& name) const {
    auto it = configs_.find(name);
    return it == configs_.end() ? nullptr : &it->second;
  }
  std::vector<std::string> configuration_names() const {
    std::vector<std::string> out;
    for (const auto& [n, c] : configs_) out.push_back(n);
    return out;
  }

  ProcessState state(const std::string& id) const {
    std::lock_guard lock(state_mutex_);
    auto it = states_.find(id);
    return it == states_.end() ? ProcessState::Stopped : it->second;
  }
  std::map<std::string, ProcessState> states() const {
    std::lock_guard lock(state_mutex_);
    return states_;
  }
  std::set<std::string> running_entities() const {
    std::lock_guard lock(state_mutex_);
    std::set<std::string> out;
    for (const auto& [id, s] : states_)
      if (s == ProcessState::Running) out.insert(id);
    return out;
  }
  std::vector<StateChange> history() const {
    std::lock_guard lock(state_mutex_);
    return history_;
  }

  std::filesystem::path scratch_dir(const std::string& id) const { return params_.scratch_root / id; }

 private:
  const Configuration& lookup(const std::string& name) const {
    auto it = configs_.find(name);
    if (it == configs_.end()) throw ConfigurationDrift("unknown configuration '" + name + "'");
    return it->second;
  }

  void transition(const std::string& id, ProcessState to, std::vector<StateChange>& out,
                  std::string note = {}) {
    std::lock_guard lock(state_mutex_);
    ProcessState& s = states_[id];
    if (s == to) return;
    if (!legal_transition(s, to))
      throw Error("illegal transition " + std::string(to_string(s)) + " -> " +
                  std::string(to_string(to)) + " for '" + id + "'");
    StateChange c{id, s, to, clock_->now(), std::move(note)};
    s = to;
    switch (to) {
      case ProcessState::Starting:
      case ProcessState::Stopping: liveness_->suspend(id); break;
      case ProcessState::Running:
        liveness_->watch(id);
        liveness_->resume(id);
        break;
      case ProcessState::Stopped:
        liveness_->unwatch(id);
        liveness_->resume(id);
        break;
      case ProcessState::Failed:
        // keeps reporting ERROR until someone restarts it
        liveness_->watch(id);
        liveness_->resume(id);
        break;
    }
    history_.push_back(c);
    out.push_back(std::move(c));
  }

  void halt(const std::string& id, std::vector<StateChange>& out) {
    const ProcessState s = state(id);
    if (s == ProcessState::Stopped) return;
    if (s == ProcessState::Failed) {
      runner_->stop(id, params_.graceful_stop);
      transition(id, ProcessState::Stopped, out, "reaped");
      return;
    }
    transition(id, ProcessState::Stopping, out);
    if (runner_->stop(id, params_.graceful_stop))
      transition(id, ProcessState::Stopped, out);
    else
      transition(id, ProcessState::Failed, out, "did not stop after forced kill");
  }

  bool launch(const EntitySpec& spec, std::vector<StateChange>& out) {
    const auto scratch = scratch_dir(spec.id);
    if (spec.clean_state) std::filesystem::remove_all(scratch);
    std::filesystem::create_directories(scratch);
    transition(spec.id, ProcessState::Starting, out);
    if (runner_->start(spec, scratch) && runner_->await_ready(spec)) {
      transition(spec.id, ProcessState::Running, out);
      return true;
    }
    runner_->stop(spec.id, params_.graceful_stop);
    transition(spec.id, ProcessState::Failed, out, "did not survive startup grace");
    return false;
  }

  void run_hooks(const std::vector<std::string>& hooks) {
    if (!hook_runner_) return;
    for (const auto& h : hooks) hook_runner_(h);
  }

  EntityRunner* runner_;
  const Clock* clock_;
  monitor::LivenessTracker* liveness_;
  OrchestratorParams params_;
  std::map<std::string, Configuration> configs_;
  SwitchHook switch_hook_;
  HookRunner hook_runner_;

  std::mutex command_mutex_;
  mutable std::mutex state_mutex_;
  std::string active_;
  std::map<std::string, ProcessState> states_;
  std::vector<StateChange> history_;
};

}  // namespace sentinel::orchestrator
