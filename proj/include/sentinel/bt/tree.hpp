#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sentinel/bt/escalation.hpp"
#include "sentinel/bt/recovery.hpp"
#include "sentinel/core/error.hpp"
#include "sentinel/monitor/status_bus.hpp"

namespace sentinel::bt {

using monitor::AggregatedStatus;
using monitor::MonitorLevel;

enum class NodeKind : std::uint8_t { Fallback, Sequence, Condition, Action };

constexpr std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Fallback: return "fallback";
    case NodeKind::Sequence: return "sequence";
    case NodeKind::Condition: return "condition";
    case NodeKind::Action: return "action";
  }
  return "?";
}

/// Condition predicate over the current snapshot.
struct ConditionBinding {
  enum class Mode : std::uint8_t {
    AnyAtLeast,  // SUCCESS if some bound monitor is at `level` or worse
    AllBelow,    // SUCCESS if every bound monitor is better than `level`
  };
  std::string error_class;
  std::vector<std::string> monitors;
  MonitorLevel level = MonitorLevel::Error;
  Mode mode = Mode::AnyAtLeast;
};

struct ActionBinding {
  std::string error_class;
  std::size_t step = 0;  // position in the class's escalation chain
  RecoveryAction action;
  std::vector<std::string> monitors;  // used to resolve the action's target
};

struct BtNode {
  NodeKind kind = NodeKind::Fallback;
  std::vector<BtNode> children;
  std::variant<std::monostate, ConditionBinding, ActionBinding> binding;

  static BtNode fallback(std::vector<BtNode> c) { return {NodeKind::Fallback, std::move(c), {}}; }
  static BtNode sequence(std::vector<BtNode> c) { return {NodeKind::Sequence, std::move(c), {}}; }
  static BtNode condition(ConditionBinding b) { return {NodeKind::Condition, {}, std::move(b)}; }
  static BtNode action(ActionBinding b) { return {NodeKind::Action, {}, std::move(b)}; }

  const ConditionBinding& as_condition() const { return std::get<ConditionBinding>(binding); }
  const ActionBinding& as_action() const { return std::get<ActionBinding>(binding); }
};

/// Structural checks plus "every condition references a declared monitor".
inline void validate_tree(const BtNode& node, const std::set<std::string>& declared) {
  switch (node.kind) {
    case NodeKind::Fallback:
    case NodeKind::Sequence:
      if (node.children.empty()) throw Error("composite node without children");
      if (!std::holds_alternative<std::monostate>(node.binding))
        throw Error("composite node carries a binding");
      for (const auto& c : node.children) validate_tree(c, declared);
      return;
    case NodeKind::Condition: {
      if (!node.children.empty()) throw Error("condition node with children");
      const auto* b = std::get_if<ConditionBinding>(&node.binding);
      if (!b) throw Error("condition node without predicate");
      if (b->monitors.empty()) throw Error("condition '" + b->error_class + "' binds no monitor");
      for (const auto& m : b->monitors)
        if (!declared.contains(m))
          throw ConfigurationDrift("condition '" + b->error_class + "' references undeclared monitor '" + m + "'");
      return;
    }
    case NodeKind::Action: {
      if (!node.children.empty()) throw Error("action node with children");
      const auto* b = std::get_if<ActionBinding>(&node.binding);
      if (!b) throw Error("action node without recovery");
      b->action.validate();
      return;
    }
  }
}

/// A dispatch decided by one tick.
struct Dispatch {
  std::string error_class;
  std::size_t step = 0;
  RecoveryAction action;
  std::string target;  // entity for restarts, class for supervisor requests
  Nanos time = 0;
};

/// Actions currently executing, held by the arbiter and handed to each tick.
struct RunningAction {
  std::uint64_t handle = 0;
  std::string error_class;
  std::size_t step = 0;
  RecoveryId action = RecoveryId::Wait;
  Nanos started = 0;
};

struct TickContext {
  const AggregatedStatus& status;
  const EscalationHistory& history;
  const std::vector<RunningAction>& running;
  Nanos now = 0;
  StormGuard storm{};

  // outputs
  std::optional<Dispatch> dispatched;
  std::vector<std::string> drift;
};

namespace detail {

inline std::optional<bool> evaluate_predicate(const ConditionBinding& b, const AggregatedStatus& s,
                                              std::vector<std::string>& drift) {
  bool any = false;
  for (const auto& m : b.monitors) {
    const auto* r = s.find(m);
    if (!r) {
      drift.push_back("condition '" + b.error_class + "': monitor '" + m + "' absent from snapshot");
      return std::nullopt;
    }
    if (r->level >= b.level) any = true;
  }
  return b.mode == ConditionBinding::Mode::AnyAtLeast ? any : !any;
}

inline std::string resolve_target(const ActionBinding& b, const AggregatedStatus& s) {
  if (b.action.id == RecoveryId::RequestSupervisor) return b.error_class;
  if (b.action.id == RecoveryId::SwitchConfiguration) return b.action.params.target_config;
  for (const auto& m : b.monitors) {
    const auto* r = s.find(m);
    if (r && r->level >= MonitorLevel::Error) return r->entity_id;
  }
  for (const auto& m : b.monitors) {
    const auto* r = s.find(m);
    if (r && r->level >= MonitorLevel::Warn) return r->entity_id;
  }
  if (b.monitors.empty()) return {};
  const auto* first = s.find(b.monitors.front());
  return first ? first->entity_id : std::string{};
}

}  // namespace detail

/// Does the predicate hold on this snapshot? Absent monitors count as "no".
inline bool condition_holds(const ConditionBinding& b, const AggregatedStatus& s) {
  std::vector<std::string> ignored;
  return detail::evaluate_predicate(b, s, ignored).value_or(false);
}

/// Reactive depth-first tick. Nodes keep no memory: RUNNING comes from the
/// execution table or from an escalation hold, never from the node itself.
inline TickStatus tick(const BtNode& node, TickContext& ctx) {
  switch (node.kind) {
    case NodeKind::Fallback:
      for (const auto& c : node.children) {
        const TickStatus s = tick(c, ctx);
        if (s != TickStatus::Failure) return s;
      }
      return TickStatus::Failure;
    case NodeKind::Sequence:
      for (const auto& c : node.children) {
        const TickStatus s = tick(c, ctx);
        if (s != TickStatus::Success) return s;
      }
      return TickStatus::Success;
    case NodeKind::Condition: {
      auto holds = detail::evaluate_predicate(node.as_condition(), ctx.status, ctx.drift);
      return holds.value_or(false) ? TickStatus::Success : TickStatus::Failure;
    }
    case NodeKind::Action: {
      const auto& b = node.as_action();
      for (const auto& r : ctx.running)
        if (r.error_class == b.error_class && r.step == b.step) return TickStatus::Running;
      switch (eligibility(b.error_class, b.action, ctx.history, ctx.now, ctx.storm)) {
        case Eligibility::Skip: return TickStatus::Failure;
        case Eligibility::Hold:
        case Eligibility::Pending: return TickStatus::Running;
        case Eligibility::Ready:
          if (!ctx.dispatched) {
            ctx.dispatched = Dispatch{b.error_class, b.step, b.action,
                                      detail::resolve_target(b, ctx.status), ctx.now};
          }
          return TickStatus::Running;
      }
      return TickStatus::Failure;
    }
  }
  return TickStatus::Failure;
}

}  // namespace sentinel::bt
