#pragma once

#include <set>
#include <string>
#include <vector>

#include "sentinel/bt/builder.hpp"
#include "sentinel/core/error.hpp"
#include "sentinel/monitor/liveness.hpp"
#include "sentinel/monitor/status_bus.hpp"

namespace sentinel::orchestrator {

struct ChannelSpec {
  std::string name;
  double rate_hz = 1.0;
  double warn_fraction = 0.2;
  double error_fraction = 0.5;

  bool operator==(const ChannelSpec&) const = default;
};

/// Liveness is error-only; the band only exists so reports stay re-derivable,
/// hence warn and error bounds one nanosecond apart.
inline constexpr double kLivenessTimeoutS = 3.0;

inline std::string rate_monitor_id(const std::string& channel) { return "rate/" + channel; }

/// Abstract launch descriptor; how it is executed is up to the runner.
struct EntitySpec {
  std::string id;
  std::vector<std::string> command;
  std::string heartbeat_channel;
  std::vector<ChannelSpec> outputs;
  double startup_grace_s = 5.0;
  bool clean_state = true;

  void validate() const {
    if (id.empty()) throw Error("entity without id");
    if (!(startup_grace_s > 0)) throw Error("entity '" + id + "': startup grace must be positive");
    for (const auto& c : outputs)
      if (!(c.rate_hz > 0) || !(c.warn_fraction > 0) || !(c.error_fraction > c.warn_fraction) ||
          c.error_fraction >= 1.0)
        throw Error("entity '" + id + "': bad tolerance for channel '" + c.name + "'");
  }

  bool operator==(const EntitySpec&) const = default;
};

/// A named operating regime: which entities run, what is monitored, and the
/// arbiter that reacts to it.
struct Configuration {
  std::string name;
  std::vector<EntitySpec> entities;
  std::vector<monitor::MonitorSpec> monitors;  // in addition to derived ones
  bt::TreeDefinition tree;
  std::vector<std::string> entry_hooks;
  std::vector<std::string> exit_hooks;

  const EntitySpec* find(const std::string& id) const {
    for (const auto& e : entities)
      if (e.id == id) return &e;
    return nullptr;
  }

  std::set<std::string> entity_ids() const {
    std::set<std::string> out;
    for (const auto& e : entities) out.insert(e.id);
    return out;
  }

  /// Explicit monitors plus one liveness monitor per entity and one rate
  /// monitor per declared output channel.
  std::vector<monitor::MonitorSpec> declared_monitors() const {
    std::vector<monitor::MonitorSpec> out;
    for (const auto& e : entities) {
      out.push_back({monitor::liveness_monitor_id(e.id), e.id, monitor::MonitorKind::Liveness,
                     monitor::Band::high_is_bad(kLivenessTimeoutS, kLivenessTimeoutS + 1e-9),
                     monitor::default_period(monitor::MonitorKind::Liveness), monitor::Unit::Seconds});
      for (const auto& c : e.outputs)
        out.push_back({rate_monitor_id(c.name), e.id, monitor::MonitorKind::Rate,
                       monitor::Band::around(c.rate_hz, c.warn_fraction, c.error_fraction),
                       monitor::default_period(monitor::MonitorKind::Rate), monitor::Unit::Hertz});
    }
    out.insert(out.end(), monitors.begin(), monitors.end());
    return out;
  }

  void validate() const {
    if (name.empty()) throw Error("configuration without name");
    std::set<std::string> ids, heartbeats;
    for (const auto& e : entities) {
      e.validate();
      if (!ids.insert(e.id).second) throw Error(name + ": duplicate entity id '" + e.id + "'");
      if (!e.heartbeat_channel.empty() && !heartbeats.insert(e.heartbeat_channel).second)
        throw Error(name + ": heartbeat channel '" + e.heartbeat_channel + "' used twice");
    }
    std::set<std::string> monitor_ids;
    for (const auto& m : declared_monitors()) {
      m.band.validate();
      if (!monitor_ids.insert(m.id).second) throw Error(name + ": duplicate monitor id '" + m.id + "'");
    }
    if (!tree.classes.empty()) (void)bt::build_tree(tree, declared_monitors());
  }
};

}  // namespace sentinel::orchestrator
