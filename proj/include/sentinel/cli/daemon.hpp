#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sentinel/bt/arbiter.hpp"
#include "sentinel/gateway/http_server.hpp"
#include "sentinel/gateway/notifiers.hpp"
#include "sentinel/metrics/store.hpp"
#include "sentinel/monitor/rate.hpp"
#include "sentinel/monitor/samplers.hpp"
#include "sentinel/orchestrator/admin_socket.hpp"
#include "sentinel/orchestrator/config_io.hpp"
#include "sentinel/orchestrator/orchestrator.hpp"
#include "sentinel/orchestrator/subprocess_runner.hpp"

namespace sentinel::cli {

/// Wall clock in nanoseconds since the Unix epoch, never decreasing.
class WallClock final : public Clock {
 public:
  Nanos now() const override {
    const Nanos t = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    Nanos prev = last_.load();
    while (t > prev && !last_.compare_exchange_weak(prev, t)) {
    }
    return std::max(t, prev);
  }

 private:
  mutable std::atomic<Nanos> last_{0};
};

struct DaemonOptions {
  std::filesystem::path config;
  std::string active;  // empty: first configuration in the file
  std::filesystem::path store = "sentinel-events.jsonl";
  std::filesystem::path admin_socket;  // empty: no admin socket
  std::filesystem::path run_dir = std::filesystem::temp_directory_path() / "sentinel-daemon";
  gateway::ServerOptions http{};
  bool http_enabled = true;
  gateway::Roster roster;
  std::string base_url = "http://127.0.0.1:8080";
  bool webhooks = false;  // POST to roster addresses; otherwise notifications go to stderr
  double session_ttl_s = 900.0;
  double duration_s = 0.0;  // 0: until stopped
};

/// Live supervision loop over real processes.
///
/// Admin socket commands, one per line:
///   status | switch <config> | restart <entity>
///   report <monitor> <value>   publish a sample for a declared monitor
///   arrival <channel>          record one message on a rate-monitored channel
class Daemon final : public bt::ActionSink, public gateway::StackInterface {
 public:
  explicit Daemon(DaemonOptions options)
      : opt_(std::move(options)),
        configs_(orchestrator::load_configurations(opt_.config.string())),
        runner_(opt_.run_dir / "logs"),
        store_(opt_.store) {
    if (configs_.empty()) throw Error(opt_.config.string() + ": no configurations");
    if (!opt_.webhooks)
      notifier_ = std::make_unique<gateway::LogNotifier>();
    else
      notifier_ = std::make_unique<gateway::WebhookNotifier>();
    sessions_ = std::make_unique<gateway::SessionManager>(
        opt_.roster, *notifier_, opt_.base_url, gateway::GatewayLimits{.ttl = from_seconds(opt_.session_ttl_s)}, this);
    orch_ = std::make_unique<orchestrator::Orchestrator>(
        configs_, runner_, clock_, liveness_,
        orchestrator::OrchestratorParams{.scratch_root = opt_.run_dir / "scratch"});
    orch_->on_switch([this](const orchestrator::Configuration& c) { on_configuration(c); });
  }

  ~Daemon() override { shutdown(); }

  Daemon(const Daemon&) = delete;
  Daemon& operator=(const Daemon&) = delete;

  /// Runs until `stop` is set or the configured duration elapses.
  int run(const std::atomic<bool>& stop) {
    {
      std::lock_guard lock(mutex_);
      const auto name = opt_.active.empty() ? configs_.front().name : opt_.active;
      auto r = orch_->activate(name);
      emit(metrics::EventKind::ConfigSwitch, {{"from", ""}, {"to", name}, {"started", r.starts()}, {"stopped", 0}});
    }
    if (opt_.http_enabled) {
      server_ = std::make_unique<gateway::GatewayServer>(*sessions_, hub_, opt_.http, [this] { return clock_.now(); });
      const int port = server_->start();
      std::clog << "gateway listening on " << opt_.http.host << ":" << port << "\n";
    }
    if (!opt_.admin_socket.empty())
      admin_ = std::make_unique<orchestrator::AdminServer>(opt_.admin_socket,
                                                          [this](const std::string& l) { return admin(l); });
    const auto start = std::chrono::steady_clock::now();
    auto next = start;
    while (!stop.load()) {
      if (opt_.duration_s > 0 &&
          std::chrono::steady_clock::now() - start >= std::chrono::duration<double>(opt_.duration_s))
        break;
      tick();
      next += std::chrono::nanoseconds(tick_period_);
      std::this_thread::sleep_until(next);
    }
    shutdown();
    return 0;
  }

  /// One supervision cycle; public for tests.
  void tick() {
    std::lock_guard lock(mutex_);
    const Nanos now = clock_.now();
    for (auto& r : orch_->supervise()) bus_.publish(std::move(r));
    sample_host(now);
    for (const auto& id : sessions_->expire_sessions(now, from_seconds(opt_.session_ttl_s)))
      if (auto s = sessions_->get(id)) {
        arbiter_->supervisor_resolved(s->error_class);
        emit(metrics::EventKind::SupervisorResolution,
             {{"session", id}, {"error_class", s->error_class}, {"state", "EXPIRED"}, {"resolver", ""}});
      }
    const auto snap = bus_.pump(now);
    publish_levels(*snap);
    arbiter_->tick(*snap, now);
    for (auto h : done_) arbiter_->finished(h);
    done_.clear();
    for (auto it = timers_.begin(); it != timers_.end();) {
      if (now >= it->second) {
        arbiter_->finished(it->first);
        result(it->first, "completed");
        it = timers_.erase(it);
      } else {
        ++it;
      }
    }
    store_.flush();
  }

  std::string admin(const std::string& line) {
    std::istringstream in(line);
    std::string cmd, a, b;
    in >> cmd >> a >> b;
    std::lock_guard lock(mutex_);
    nlohmann::json reply;
    if (cmd == "report") {
      const auto* spec = find_monitor(a);
      double v = 0;
      if (!spec || b.empty() || !(std::istringstream(b) >> v)) {
        reply = {{"ok", false}, {"error", "usage: report <declared monitor> <value>"}};
      } else {
        bus_.publish(monitor::sample_report(*spec, v, clock_.now()));
        reply = {{"ok", true}};
      }
      return reply.dump();
    }
    if (cmd == "arrival") {
      auto it = windows_.find(a);
      if (it == windows_.end()) return nlohmann::json{{"ok", false}, {"error", "unknown channel " + a}}.dump();
      const Nanos now = clock_.now();
      it->second.push(now);
      return nlohmann::json{{"ok", true}}.dump();
    }
    const auto from = orch_->active_name();
    auto out = orchestrator::handle_admin_command(*orch_, line);
    if (cmd == "switch" && orch_->active_name() != from)
      emit(metrics::EventKind::ConfigSwitch, {{"from", from}, {"to", orch_->active_name()}, {"reason", "admin"}});
    return out;
  }

  gateway::SessionManager& sessions() { return *sessions_; }
  gateway::StreamHub& hub() { return hub_; }

  void dispatch(std::uint64_t handle, const bt::Dispatch& d) override {
    const std::string action(bt::to_string(d.action.id));
    emit(metrics::EventKind::ActionDispatch,
         {{"handle", handle}, {"error_class", d.error_class}, {"step", d.step}, {"action", action}, {"target", d.target}});
    using bt::RecoveryId;
    switch (d.action.id) {
      case RecoveryId::RestartNode:
      case RecoveryId::RestartLocalization: {
        const std::string target = d.action.id == RecoveryId::RestartNode ? d.target : "localization";
        bool ok = false;
        try {
          ok = orch_->restart_entity(target).final_state == orchestrator::ProcessState::Running;
        } catch (const Error&) {
        }
        result(handle, ok ? "completed" : "failed");
        done_.push_back(handle);
        break;
      }
      case RecoveryId::SwitchConfiguration:
        try {
          orch_->switch_configuration(d.target);
          result(handle, "completed");
        } catch (const Error&) {
          result(handle, "failed");
        }
        done_.push_back(handle);
        break;
      case RecoveryId::RequestSupervisor: {
        nlohmann::json snap = nlohmann::json::object();
        if (auto s = bus_.latest())
          for (const auto& [id, r] : s->entries)
            if (r.level != monitor::MonitorLevel::Ok) snap[id] = std::string(monitor::to_string(r.level));
        auto r = sessions_->open_session(d.error_class, {{"monitors", snap}}, clock_.now());
        emit(metrics::EventKind::SupervisorRequest,
             {{"session", r.session_id}, {"error_class", d.error_class}, {"created", r.created}});
        break;
      }
      default:
        // No actuator in the daemon; timed actions hold their slot for their duration.
        timers_[handle] = clock_.now() + from_seconds(d.action.params.duration_s);
        break;
    }
  }

  void cancel(std::uint64_t handle, const bt::RunningAction&, const std::string& reason) override {
    timers_.erase(handle);
    emit(metrics::EventKind::ActionResult, {{"handle", handle}, {"outcome", "cancelled"}, {"reason", reason}});
  }

  void set_pose(const gateway::InterventionSession& s, const gateway::SetPose& p) override {
    std::lock_guard lock(mutex_);
    emit(metrics::EventKind::ManualIntervention, {{"requested", true},
                                                  {"action", "set_pose"},
                                                  {"session", s.id},
                                                  {"x", p.x},
                                                  {"y", p.y},
                                                  {"theta", p.theta}});
  }

  void teleop(const gateway::InterventionSession& s, const gateway::Teleop& t) override {
    std::lock_guard lock(mutex_);
    emit(metrics::EventKind::ManualIntervention, {{"requested", true},
                                                  {"action", "teleop"},
                                                  {"session", s.id},
                                                  {"v", t.v},
                                                  {"omega", t.omega},
                                                  {"duration_s", t.duration_s}});
  }

  void resolved(const gateway::InterventionSession& s) override {
    std::lock_guard lock(mutex_);
    if (arbiter_) arbiter_->supervisor_resolved(s.error_class);
    emit(metrics::EventKind::SupervisorResolution,
         {{"session", s.id}, {"error_class", s.error_class}, {"state", "RESOLVED"}, {"resolver", s.resolver}});
  }

 private:
  void shutdown() {
    admin_.reset();
    if (server_) server_->stop();
    server_.reset();
    std::lock_guard lock(mutex_);
    if (orch_ && !stopped_) {
      stopped_ = true;
      for (const auto& id : orch_->running_entities()) runner_.stop(id, kNanosPerSecond);
    }
    store_.flush();
  }

  void on_configuration(const orchestrator::Configuration& c) {
    declared_ = c.declared_monitors();
    bus_.reconfigure(declared_);
    tick_period_ = c.tree.tick_period;
    if (arbiter_)
      arbiter_->reconfigure(c.tree, declared_);
    else
      arbiter_ = std::make_unique<bt::Arbiter>(c.tree, declared_, *this);
    windows_.clear();
    for (const auto& e : c.entities)
      for (const auto& o : e.outputs) windows_.emplace(o.name, monitor::RateWindow(64, o.rate_hz));
    next_due_.clear();
  }

  const monitor::MonitorSpec* find_monitor(const std::string& id) const {
    for (const auto& m : declared_)
      if (m.id == id) return &m;
    return nullptr;
  }

  void sample_host(Nanos now) {
    for (const auto& m : declared_) {
      if (m.event_driven()) continue;
      auto& due = next_due_[m.id];
      if (now < due) continue;
      due = now + m.period;
      if (m.kind == monitor::MonitorKind::Cpu) {
        if (auto v = proc_.cpu_percent()) bus_.publish(monitor::sample_report(m, *v, now));
      } else if (m.kind == monitor::MonitorKind::Ram) {
        if (auto v = monitor::ProcSampler::ram_percent()) bus_.publish(monitor::sample_report(m, *v, now));
      } else if (m.kind == monitor::MonitorKind::Rate) {
        auto it = windows_.find(m.id.substr(m.id.find('/') + 1));
        if (it == windows_.end()) continue;
        it->second.prune_before(now - 10 * kNanosPerSecond);
        bus_.publish(monitor::rate_report(it->second, m.band, m.id, m.entity_id, now));
      }
    }
  }

  void publish_levels(const monitor::AggregatedStatus& s) {
    nlohmann::json j = {{"sequence", s.sequence}, {"timestamp", s.timestamp}};
    bool changed = false;
    for (const auto& [id, r] : s.entries) {
      const std::string level(monitor::to_string(r.level));
      j["monitors"][id] = level;
      auto& prev = levels_[id];
      if (prev != level) {
        changed = true;
        prev = level;
        emit(metrics::EventKind::MonitorReport,
             {{"monitor", id}, {"entity", r.entity_id}, {"level", level}, {"value", r.value}, {"message", r.message}});
      }
    }
    if (changed) hub_.publish("status", j);
  }

  void result(std::uint64_t handle, const std::string& outcome) {
    emit(metrics::EventKind::ActionResult, {{"handle", handle}, {"outcome", outcome}});
  }

  void emit(metrics::EventKind kind, metrics::Payload data) {
    metrics::Event e;
    e.t = clock_.now();
    e.kind = kind;
    e.producer = "daemon";
    e.data = std::move(data);
    hub_.publish("event", nlohmann::json::parse(metrics::encode_event(e)));
    store_.emit(std::move(e));
  }

  DaemonOptions opt_;
  std::vector<orchestrator::Configuration> configs_;
  WallClock clock_;
  orchestrator::SubprocessRunner runner_;
  monitor::LivenessTracker liveness_;
  monitor::StatusBus bus_;
  monitor::ProcSampler proc_;
  metrics::EventStore store_;
  gateway::StreamHub hub_;
  std::unique_ptr<gateway::Notifier> notifier_;
  std::unique_ptr<gateway::SessionManager> sessions_;
  std::unique_ptr<orchestrator::Orchestrator> orch_;
  std::unique_ptr<bt::Arbiter> arbiter_;
  std::unique_ptr<gateway::GatewayServer> server_;
  std::unique_ptr<orchestrator::AdminServer> admin_;
  std::recursive_mutex mutex_;
  std::vector<monitor::MonitorSpec> declared_;
  std::map<std::string, monitor::RateWindow> windows_;
  std::map<std::string, Nanos> next_due_;
  std::map<std::string, std::string> levels_;
  std::map<std::uint64_t, Nanos> timers_;
  std::vector<std::uint64_t> done_;
  Nanos tick_period_ = kNanosPerSecond;
  bool stopped_ = false;
};

}  // namespace sentinel::cli
