#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sentinel/bt/recovery.hpp"
#include "sentinel/core/time.hpp"

namespace sentinel::bt {

struct DispatchRecord {
  Nanos time = 0;
  std::string error_class;
  RecoveryId action = RecoveryId::Wait;
  std::string target;
};

struct StormGuard {
  Nanos window = 180 * kNanosPerSecond;
  std::size_t threshold = 10;
};

/// True iff `threshold` restart_node dispatches fit in some window of length
/// `window` (first and last at most `window` apart).
inline bool detect_restart_storm(std::span<const DispatchRecord> history, Nanos window,
                                 std::size_t threshold) {
  if (window <= 0) throw Error("storm window must be positive");
  if (threshold == 0) return true;
  std::vector<Nanos> t;
  for (const auto& d : history)
    if (d.action == RecoveryId::RestartNode) t.push_back(d.time);
  std::sort(t.begin(), t.end());
  for (std::size_t i = 0; i + threshold - 1 < t.size(); ++i)
    if (t[i + threshold - 1] - t[i] <= window) return true;
  return false;
}

/// Everything the arbiter remembers between ticks, held outside the tree so
/// that a tick is a pure function of (snapshot, history, running actions).
class EscalationHistory {
 public:
  void record(DispatchRecord d) {
    if (d.action == RecoveryId::RequestSupervisor) supervisor_pending_.insert(d.error_class);
    dispatches_.push_back(std::move(d));
  }

  void begin_episode(const std::string& cls, Nanos t) { episodes_.try_emplace(cls, t); }
  void end_episode(const std::string& cls) { episodes_.erase(cls); }
  std::optional<Nanos> episode_start(const std::string& cls) const {
    auto it = episodes_.find(cls);
    return it == episodes_.end() ? std::nullopt : std::optional<Nanos>(it->second);
  }

  bool supervisor_pending(const std::string& cls) const { return supervisor_pending_.contains(cls); }
  /// A resolved intervention closes the episode: if the error persists, the
  /// chain starts over from its cheapest step.
  void supervisor_resolved(const std::string& cls) {
    supervisor_pending_.erase(cls);
    episodes_.erase(cls);
  }

  int attempts_in_episode(const std::string& cls, RecoveryId action) const {
    auto start = episode_start(cls);
    if (!start) return 0;
    int n = 0;
    for (auto it = dispatches_.rbegin(); it != dispatches_.rend() && it->time >= *start; ++it)
      if (it->error_class == cls && it->action == action) ++n;
    return n;
  }

  std::optional<Nanos> last_dispatch(const std::string& cls, RecoveryId action) const {
    for (auto it = dispatches_.rbegin(); it != dispatches_.rend(); ++it)
      if (it->error_class == cls && it->action == action) return it->time;
    return std::nullopt;
  }

  /// Restart storm ending at `now`.
  bool storm_active(Nanos now, const StormGuard& guard) const {
    std::vector<DispatchRecord> recent;
    for (const auto& d : dispatches_)
      if (d.action == RecoveryId::RestartNode && now - d.time <= guard.window) recent.push_back(d);
    return recent.size() >= guard.threshold;
  }

  /// Drop records no rule can look at any more.
  void prune(Nanos now, Nanos keep) {
    const Nanos cutoff = now - keep;
    Nanos oldest_episode = now;
    for (const auto& [c, t] : episodes_) oldest_episode = std::min(oldest_episode, t);
    const Nanos limit = std::min(cutoff, oldest_episode);
    std::erase_if(dispatches_, [&](const DispatchRecord& d) { return d.time < limit; });
  }

  const std::vector<DispatchRecord>& dispatches() const { return dispatches_; }

 private:
  std::vector<DispatchRecord> dispatches_;
  std::map<std::string, Nanos> episodes_;
  std::set<std::string> supervisor_pending_;
};

/// What a chain step may do right now.
enum class Eligibility : std::uint8_t {
  Ready,     // dispatch it
  Hold,      // budget left but cooling down: wait, do not escalate past it
  Pending,   // supervisor request already open for the class
  Skip,      // exhausted or storm-forced: fall through to the next step
};

inline Eligibility eligibility(const std::string& cls, const RecoveryAction& action,
                               const EscalationHistory& history, Nanos now,
                               const StormGuard& guard) {
  if (history.supervisor_pending(cls))
    return action.id == RecoveryId::RequestSupervisor ? Eligibility::Pending : Eligibility::Skip;
  if (action.id == RecoveryId::RestartNode && history.storm_active(now, guard))
    return Eligibility::Skip;
  if (history.attempts_in_episode(cls, action.id) >= action.budget) return Eligibility::Skip;
  if (auto last = history.last_dispatch(cls, action.id);
      last && now - *last < from_seconds(action.cooldown_s))
    return Eligibility::Hold;
  return Eligibility::Ready;
}

/// First step of `chain` allowed to run now, or nothing when the class must
/// wait (cooldown, open supervisor request) or the chain is spent.
inline std::optional<RecoveryAction> escalate(const std::string& cls,
                                              std::span<const RecoveryAction> chain,
                                              const EscalationHistory& history, Nanos now,
                                              const StormGuard& guard = {}) {
  if (chain.empty()) throw Error("escalation chain is empty");
  for (const auto& a : chain) {
    switch (eligibility(cls, a, history, now, guard)) {
      case Eligibility::Ready: return a;
      case Eligibility::Hold:
      case Eligibility::Pending: return std::nullopt;
      case Eligibility::Skip: break;
    }
  }
  return std::nullopt;
}

}  // namespace sentinel::bt
