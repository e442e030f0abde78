#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sentinel/core/error.hpp"
#include "sentinel/core/time.hpp"

namespace sentinel::gateway {

using Json = nlohmann::ordered_json;

enum class SessionState : std::uint8_t { Pending, Active, Resolved, Expired };

constexpr std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::Pending: return "PENDING";
    case SessionState::Active: return "ACTIVE";
    case SessionState::Resolved: return "RESOLVED";
    case SessionState::Expired: return "EXPIRED";
  }
  return "?";
}

struct Supervisor {
  std::string id;
  std::string address;  // webhook URL
};

using Roster = std::vector<Supervisor>;

struct Notification {
  enum class Kind : std::uint8_t { Request, Reminder, AllClear };
  Kind kind = Kind::Request;
  std::string supervisor_id;
  std::string address;
  std::string session_id;
  std::string error_class;
  std::string url;
  Nanos time = 0;
};

constexpr std::string_view to_string(Notification::Kind k) {
  switch (k) {
    case Notification::Kind::Request: return "request";
    case Notification::Kind::Reminder: return "reminder";
    case Notification::Kind::AllClear: return "all_clear";
  }
  return "?";
}

/// Webhook body; see docs/webhook.md.
inline Json to_json(const Notification& n) {
  Json j;
  j["type"] = std::string(to_string(n.kind));
  j["session"] = n.session_id;
  j["error_class"] = n.error_class;
  j["url"] = n.url;
  j["supervisor"] = n.supervisor_id;
  j["time_ns"] = n.time;
  return j;
}

class Notifier {
 public:
  virtual ~Notifier() = default;
  /// Must not block on the network.
  virtual void send(const Notification& n) = 0;
};

class RecordingNotifier final : public Notifier {
 public:
  void send(const Notification& n) override {
    std::lock_guard lock(mutex_);
    sent_.push_back(n);
  }
  std::vector<Notification> sent() const {
    std::lock_guard lock(mutex_);
    return sent_;
  }
  std::size_t count(Notification::Kind k) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(sent_.begin(), sent_.end(), [&](auto& n) { return n.kind == k; }));
  }
  void clear() {
    std::lock_guard lock(mutex_);
    sent_.clear();
  }

 private:
  mutable std::mutex mutex_;
  std::vector<Notification> sent_;
};

class FanoutNotifier final : public Notifier {
 public:
  explicit FanoutNotifier(std::vector<Notifier*> targets) : targets_(std::move(targets)) {}
  void send(const Notification& n) override {
    for (auto* t : targets_) t->send(n);
  }

 private:
  std::vector<Notifier*> targets_;
};

struct SetPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct Teleop {
  double v = 0.0;
  double omega = 0.0;
  double duration_s = 1.0;
};

struct ConfirmFix {};

using SessionAction = std::variant<SetPose, Teleop, ConfirmFix>;

inline std::string action_name(const SessionAction& a) {
  if (std::holds_alternative<SetPose>(a)) return "set_pose";
  if (std::holds_alternative<Teleop>(a)) return "teleop";
  return "confirm_fix";
}

struct TranscriptEntry {
  Nanos time = 0;
  std::string supervisor;
  std::string action;
  Json params = Json::object();
};

struct InterventionSession {
  std::string id;
  std::string error_class;
  Json snapshot = Json::object();
  Nanos created = 0;
  SessionState state = SessionState::Pending;
  std::string engaged_by;
  std::string resolver;
  std::vector<TranscriptEntry> transcript;
  std::string url;
  bool renotified = false;

  bool open() const { return state == SessionState::Pending || state == SessionState::Active; }
};

inline Json to_json(const InterventionSession& s) {
  Json j;
  j["id"] = s.id;
  j["error_class"] = s.error_class;
  j["state"] = std::string(to_string(s.state));
  j["created_ns"] = s.created;
  j["url"] = s.url;
  j["engaged_by"] = s.engaged_by;
  j["resolver"] = s.resolver;
  j["snapshot"] = s.snapshot;
  Json t = Json::array();
  for (const auto& e : s.transcript)
    t.push_back({{"time_ns", e.time}, {"supervisor", e.supervisor}, {"action", e.action}, {"params", e.params}});
  j["transcript"] = t;
  return j;
}

/// Rejected request: unknown session, closed session, bad argument.
class SessionError : public Error {
 public:
  enum class Code : std::uint8_t { NotFound, Closed, Invalid };
  SessionError(Code c, const std::string& what) : Error(what), code_(c) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// What the robot side does with supervisor input.
class StackInterface {
 public:
  virtual ~StackInterface() = default;
  virtual void set_pose(const InterventionSession& s, const SetPose& p) = 0;
  virtual void teleop(const InterventionSession& s, const Teleop& t) = 0;
  virtual void resolved(const InterventionSession& s) = 0;
};

struct GatewayLimits {
  double max_v = 0.5;        // m/s
  double max_omega = 1.0;    // rad/s
  double max_teleop_s = 10.0;
  Nanos ttl = 15 * 60 * kNanosPerSecond;
};

inline Teleop clamp_teleop(Teleop t, const GatewayLimits& lim) {
  auto clamp = [](double v, double m) { return std::isfinite(v) ? std::clamp(v, -m, m) : 0.0; };
  t.v = clamp(t.v, lim.max_v);
  t.omega = clamp(t.omega, lim.max_omega);
  t.duration_s = std::isfinite(t.duration_s) ? std::clamp(t.duration_s, 0.0, lim.max_teleop_s) : 0.0;
  return t;
}

struct OpenResult {
  std::string session_id;
  bool created = false;
  std::size_t notifications = 0;
  std::optional<std::string> warning;
};

/// Session table. All mutations go through one lock; stack callbacks and
/// change listeners run after it is released.
class SessionManager {
 public:
  using Listener = std::function<void(const InterventionSession&)>;

  SessionManager(Roster roster, Notifier& notifier, std::string base_url = "http://localhost:8080",
                 GatewayLimits limits = {}, StackInterface* stack = nullptr)
      : roster_(std::move(roster)), notifier_(&notifier), base_url_(std::move(base_url)), limits_(limits),
        stack_(stack) {}

  void set_stack(StackInterface* stack) { stack_ = stack; }
  void on_change(Listener l) { listeners_.push_back(std::move(l)); }
  const Roster& roster() const { return roster_; }
  const GatewayLimits& limits() const { return limits_; }

  /// One open session per error class; a second request is folded into it.
  OpenResult open_session(const std::string& error_class, Json snapshot, Nanos now) {
    OpenResult r;
    InterventionSession copy;
    {
      std::lock_guard lock(mutex_);
      for (const auto& [id, s] : sessions_)
        if (s.error_class == error_class && s.open()) {
          r.session_id = id;
          return r;
        }
      InterventionSession s;
      s.id = "s" + std::to_string(++next_id_);
      s.error_class = error_class;
      s.snapshot = std::move(snapshot);
      s.created = now;
      s.url = base_url_ + "/sessions/" + s.id;
      r.session_id = s.id;
      r.created = true;
      for (const auto& sup : roster_) notify(Notification::Kind::Request, sup, s, now);
      r.notifications = roster_.size();
      if (roster_.empty()) r.warning = "supervisor roster is empty; nobody was notified for '" + error_class + "'";
      sessions_.emplace(s.id, s);
      order_.push_back(s.id);
      copy = s;
    }
    changed(copy);
    return r;
  }

  /// A supervisor opened the session page.
  InterventionSession engage(const std::string& id, const std::string& supervisor) {
    InterventionSession copy;
    {
      std::lock_guard lock(mutex_);
      auto& s = find_locked(id);
      if (!s.open()) throw SessionError(SessionError::Code::Closed, "session " + id + " is closed");
      if (s.state == SessionState::Pending) {
        s.state = SessionState::Active;
        s.engaged_by = supervisor;
      }
      copy = s;
    }
    changed(copy);
    return copy;
  }

  SessionState handle_action(const std::string& id, const std::string& supervisor, SessionAction action, Nanos now) {
    InterventionSession copy;
    {
      std::lock_guard lock(mutex_);
      auto& s = find_locked(id);
      if (!s.open())
        throw SessionError(SessionError::Code::Closed,
                           "session " + id + " is " + std::string(to_string(s.state)) + "; action rejected");
      if (supervisor.empty()) throw SessionError(SessionError::Code::Invalid, "supervisor id required");
      TranscriptEntry e{now, supervisor, action_name(action), Json::object()};
      if (auto* p = std::get_if<SetPose>(&action)) {
        if (!std::isfinite(p->x) || !std::isfinite(p->y) || !std::isfinite(p->theta))
          throw SessionError(SessionError::Code::Invalid, "pose must be finite");
        e.params = {{"x", p->x}, {"y", p->y}, {"theta", p->theta}};
      } else if (auto* t = std::get_if<Teleop>(&action)) {
        *t = clamp_teleop(*t, limits_);
        e.params = {{"v", t->v}, {"omega", t->omega}, {"duration_s", t->duration_s}};
      }
      if (s.state == SessionState::Pending) {
        s.state = SessionState::Active;
        s.engaged_by = supervisor;
      }
      s.transcript.push_back(std::move(e));
      if (std::holds_alternative<ConfirmFix>(action)) {
        s.state = SessionState::Resolved;
        s.resolver = supervisor;
        broadcast_locked(s, now);
      }
      copy = s;
    }
    if (stack_) {
      if (auto* p = std::get_if<SetPose>(&action)) stack_->set_pose(copy, *p);
      else if (auto* t = std::get_if<Teleop>(&action)) stack_->teleop(copy, *t);
      else stack_->resolved(copy);
    }
    changed(copy);
    return copy.state;
  }

  /// All-clear to every roster entry except the resolver. Already sent by
  /// confirm_fix; calling it again re-sends.
  std::vector<Notification> broadcast_all_clear(const std::string& id, Nanos now) {
    std::lock_guard lock(mutex_);
    auto& s = find_locked(id);
    if (s.state != SessionState::Resolved)
      throw SessionError(SessionError::Code::Invalid, "session " + id + " is not resolved");
    return broadcast_locked(s, now);
  }

  /// Pending sessions older than `ttl` expire and are re-announced once.
  std::vector<std::string> expire_sessions(Nanos now, Nanos ttl) {
    if (ttl <= 0) throw Error("ttl must be positive");
    std::vector<std::string> expired;
    std::vector<InterventionSession> copies;
    {
      std::lock_guard lock(mutex_);
      for (const auto& id : order_) {
        auto& s = sessions_.at(id);
        if (s.state != SessionState::Pending || now - s.created <= ttl) continue;
        s.state = SessionState::Expired;
        if (!s.renotified) {
          for (const auto& sup : roster_) notify(Notification::Kind::Reminder, sup, s, now);
          s.renotified = true;
        }
        expired.push_back(id);
        copies.push_back(s);
      }
    }
    for (const auto& c : copies) changed(c);
    return expired;
  }

  std::vector<std::string> expire_sessions(Nanos now) { return expire_sessions(now, limits_.ttl); }

  std::optional<InterventionSession> get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<InterventionSession> open_for(const std::string& error_class) const {
    std::lock_guard lock(mutex_);
    for (const auto& [id, s] : sessions_)
      if (s.error_class == error_class && s.open()) return s;
    return std::nullopt;
  }

  std::vector<InterventionSession> list() const {
    std::lock_guard lock(mutex_);
    std::vector<InterventionSession> out;
    for (const auto& id : order_) out.push_back(sessions_.at(id));
    return out;
  }

 private:
  InterventionSession& find_locked(const std::string& id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionError(SessionError::Code::NotFound, "no session " + id);
    return it->second;
  }

  void notify(Notification::Kind kind, const Supervisor& sup, const InterventionSession& s, Nanos now) {
    notifier_->send({kind, sup.id, sup.address, s.id, s.error_class, s.url, now});
  }

  std::vector<Notification> broadcast_locked(const InterventionSession& s, Nanos now) {
    std::vector<Notification> out;
    for (const auto& sup : roster_) {
      if (sup.id == s.resolver) continue;
      Notification n{Notification::Kind::AllClear, sup.id, sup.address, s.id, s.error_class, s.url, now};
      notifier_->send(n);
      out.push_back(std::move(n));
    }
    return out;
  }

  void changed(const InterventionSession& s) {
    for (auto& l : listeners_) l(s);
  }

  Roster roster_;
  Notifier* notifier_;
  std::string base_url_;
  GatewayLimits limits_;
  StackInterface* stack_;
  std::vector<Listener> listeners_;
  mutable std::mutex mutex_;
  std::map<std::string, InterventionSession> sessions_;
  std::vector<std::string> order_;
  std::uint64_t next_id_ = 0;
};

}  // namespace sentinel::gateway
