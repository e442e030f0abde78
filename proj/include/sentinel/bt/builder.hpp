#pragma once

#include <set>
#include <string>
#include <vector>

#include "sentinel/bt/tree.hpp"
#include "sentinel/monitor/status_bus.hpp"

namespace sentinel::bt {

/// One error class: which monitors raise it and how recovery escalates.
struct ErrorClassSpec {
  std::string name;
  std::vector<std::string> monitors;
  MonitorLevel trigger = MonitorLevel::Error;
  std::vector<RecoveryAction> chain;  // cheap -> expensive

  bool operator==(const ErrorClassSpec&) const = default;
};

/// Declarative arbiter definition; list order is handling priority.
struct TreeDefinition {
  std::vector<ErrorClassSpec> classes;
  StormGuard storm{};
  Nanos tick_period = kNanosPerSecond;

  bool operator==(const TreeDefinition& o) const {
    return classes == o.classes && storm.window == o.storm.window &&
           storm.threshold == o.storm.threshold && tick_period == o.tick_period;
  }
};

inline const std::string kNominalClass = "nominal";

/// Classes watching localization or navigation monitors must end in a
/// supervisor request.
inline bool needs_supervisor(const ErrorClassSpec& cls, const std::vector<monitor::MonitorSpec>& declared) {
  for (const auto& m : cls.monitors)
    for (const auto& d : declared)
      if (d.id == m && (d.kind == monitor::MonitorKind::Localization ||
                        d.kind == monitor::MonitorKind::Navigation))
        return true;
  return false;
}

/// Returns the definition with implied supervisor steps added, after checking it.
inline TreeDefinition normalize(TreeDefinition def, const std::vector<monitor::MonitorSpec>& declared) {
  std::set<std::string> names;
  for (auto& cls : def.classes) {
    if (cls.name.empty() || cls.name == kNominalClass)
      throw Error("invalid error class name '" + cls.name + "'");
    if (!names.insert(cls.name).second) throw Error("duplicate error class '" + cls.name + "'");
    if (cls.chain.empty()) throw Error("error class '" + cls.name + "' has an empty recovery chain");
    if (cls.monitors.empty()) throw Error("error class '" + cls.name + "' binds no monitor");
    for (std::size_t i = 0; i + 1 < cls.chain.size(); ++i)
      if (cls.chain[i].id == RecoveryId::RequestSupervisor)
        throw Error("error class '" + cls.name + "': request_supervisor must be the last step");
    if (needs_supervisor(cls, declared) && cls.chain.back().id != RecoveryId::RequestSupervisor)
      cls.chain.push_back(make_action(RecoveryId::RequestSupervisor));
    for (const auto& a : cls.chain) a.validate();
  }
  if (def.storm.window <= 0) throw Error("storm window must be positive");
  if (def.tick_period <= 0) throw Error("tick period must be positive");
  return def;
}

/// Fallback over per-class Sequence(condition, escalation fallback), closed
/// by a "nominal" condition so an all-clear snapshot ticks to SUCCESS and an
/// error nobody can handle any more ticks to FAILURE.
inline BtNode build_tree(const TreeDefinition& raw, const std::vector<monitor::MonitorSpec>& declared) {
  const TreeDefinition def = normalize(raw, declared);
  std::set<std::string> declared_ids;
  for (const auto& d : declared) declared_ids.insert(d.id);

  std::vector<BtNode> top;
  std::vector<std::string> all_monitors;
  std::set<std::string> seen;
  for (const auto& cls : def.classes) {
    std::vector<BtNode> steps;
    for (std::size_t i = 0; i < cls.chain.size(); ++i)
      steps.push_back(BtNode::action({cls.name, i, cls.chain[i], cls.monitors}));
    top.push_back(BtNode::sequence({
        BtNode::condition({cls.name, cls.monitors, cls.trigger, ConditionBinding::Mode::AnyAtLeast}),
        BtNode::fallback(std::move(steps)),
    }));
    for (const auto& m : cls.monitors)
      if (seen.insert(m).second) all_monitors.push_back(m);
  }
  if (!all_monitors.empty())
    top.push_back(BtNode::condition(
        {kNominalClass, all_monitors, MonitorLevel::Error, ConditionBinding::Mode::AllBelow}));
  if (top.empty()) throw Error("tree definition declares no error classes");
  BtNode root = BtNode::fallback(std::move(top));
  validate_tree(root, declared_ids);
  return root;
}

inline const ErrorClassSpec* find_class(const TreeDefinition& def, const std::string& name) {
  for (const auto& c : def.classes)
    if (c.name == name) return &c;
  return nullptr;
}

}  // namespace sentinel::bt
