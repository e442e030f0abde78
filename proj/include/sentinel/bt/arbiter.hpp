#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/bt/builder.hpp"
#include "sentinel/bt/tree.hpp"

namespace sentinel::bt {

/// Receives dispatch and cancel signals. Implementations must return quickly;
/// execution happens elsewhere and reports back through Arbiter::finished().
class ActionSink {
 public:
  virtual ~ActionSink() = default;
  virtual void dispatch(std::uint64_t handle, const Dispatch& d) = 0;
  virtual void cancel(std::uint64_t handle, const RunningAction& action, const std::string& reason) = 0;
};

struct TickReport {
  std::uint64_t sequence = 0;
  TickStatus status = TickStatus::Success;
  std::optional<Dispatch> dispatched;
  std::optional<std::uint64_t> handle;
  std::vector<RunningAction> cancelled;
  std::vector<std::string> drift;
  bool storm = false;
};

/// Owns the tree, the escalation history and the execution table, and ticks
/// once per status snapshot.
class Arbiter {
 public:
  Arbiter(const TreeDefinition& def, const std::vector<monitor::MonitorSpec>& declared, ActionSink& sink)
      : sink_(&sink) {
    reconfigure(def, declared);
  }

  /// Swap the tree. Running actions of classes that disappear are cancelled.
  void reconfigure(const TreeDefinition& def, const std::vector<monitor::MonitorSpec>& declared) {
    BtNode root = build_tree(def, declared);
    def_ = normalize(def, declared);
    root_ = std::move(root);
    std::vector<RunningAction> keep;
    for (auto& r : running_) {
      if (find_class(def_, r.error_class))
        keep.push_back(r);
      else
        sink_->cancel(r.handle, r, "configuration switch");
    }
    running_ = std::move(keep);
  }

  TickReport tick(const AggregatedStatus& status, Nanos now) {
    if (status.sequence < last_sequence_) throw Error("status snapshot sequence went backwards");
    last_sequence_ = status.sequence;

    TickReport out;
    out.sequence = status.sequence;

    for (const auto& cls : def_.classes) {
      const ConditionBinding cond{cls.name, cls.monitors, cls.trigger, ConditionBinding::Mode::AnyAtLeast};
      if (condition_holds(cond, status)) {
        history_.begin_episode(cls.name, now);
        continue;
      }
      history_.end_episode(cls.name);
      std::vector<RunningAction> keep;
      for (auto& r : running_) {
        if (r.error_class == cls.name) {
          sink_->cancel(r.handle, r, "error cleared");
          out.cancelled.push_back(r);
        } else {
          keep.push_back(r);
        }
      }
      running_ = std::move(keep);
    }

    TickContext ctx{status, history_, running_, now, def_.storm, std::nullopt, {}};
    out.status = bt::tick(root_, ctx);
    out.drift = std::move(ctx.drift);
    out.storm = history_.storm_active(now, def_.storm);

    if (ctx.dispatched) {
      const std::uint64_t handle = ++next_handle_;
      const Dispatch& d = *ctx.dispatched;
      history_.record({now, d.error_class, d.action.id, d.target});
      if (d.action.id != RecoveryId::RequestSupervisor)
        running_.push_back({handle, d.error_class, d.step, d.action.id, now});
      out.dispatched = d;
      out.handle = handle;
      sink_->dispatch(handle, d);
    }

    Nanos keep = def_.storm.window;
    for (const auto& c : def_.classes)
      for (const auto& a : c.chain) keep = std::max(keep, from_seconds(a.cooldown_s));
    history_.prune(now, keep + kNanosPerSecond);
    return out;
  }

  /// The executor reports that an action ended (completed, failed or cancelled).
  void finished(std::uint64_t handle) {
    std::erase_if(running_, [&](const RunningAction& r) { return r.handle == handle; });
  }

  void supervisor_resolved(const std::string& error_class) { history_.supervisor_resolved(error_class); }

  const EscalationHistory& history() const { return history_; }
  const std::vector<RunningAction>& running() const { return running_; }
  const TreeDefinition& definition() const { return def_; }
  const BtNode& root() const { return root_; }

 private:
  ActionSink* sink_;
  TreeDefinition def_;
  BtNode root_;
  EscalationHistory history_;
  std::vector<RunningAction> running_;
  std::uint64_t last_sequence_ = 0;
  std::uint64_t next_handle_ = 0;
};

}  // namespace sentinel::bt
