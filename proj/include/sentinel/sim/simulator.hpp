#pragma once

#include <atomic>
#include <cmath>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "sentinel/bt/arbiter.hpp"
#include "sentinel/docking/docking_sim.hpp"
#include "sentinel/gateway/session.hpp"
#include "sentinel/metrics/store.hpp"
#include "sentinel/monitor/clock_offset.hpp"
#include "sentinel/monitor/rate.hpp"
#include "sentinel/monitor/samplers.hpp"
#include "sentinel/orchestrator/orchestrator.hpp"
#include "sentinel/orchestrator/runner.hpp"
#include "sentinel/sim/scenario.hpp"

namespace sentinel::sim {

enum class Mode : std::uint8_t { Patrol, Docking, Charging, Recovering, Error, Off };

constexpr std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Patrol: return "PATROL";
    case Mode::Docking: return "DOCKING";
    case Mode::Charging: return "CHARGING";
    case Mode::Recovering: return "RECOVERING";
    case Mode::Error: return "ERROR";
    case Mode::Off: return "OFF";
  }
  return "?";
}

/// Single-threaded virtual-time run of one scenario. Everything stochastic
/// draws from generators seeded by the scenario, so the event stream is a
/// function of the scenario alone.
class Simulator final : public bt::ActionSink, public gateway::StackInterface {
 public:
  Simulator(Scenario scenario, metrics::EventSink& sink, gateway::Notifier* notifier = nullptr)
      : sc_(std::move(scenario)),
        sink_(&sink),
        notifier_(notifier ? notifier : &recording_),
        rng_(sc_.seed),
        people_rng_(sc_.seed ^ 0x5851F42D4C957F2DULL),
        supervisor_rng_(sc_.seed ^ 0x14057B7EF767814FULL),
        battery_(sc_.battery.initial) {
    sc_.validate();
    static std::atomic<int> instance{0};
    scratch_ = std::filesystem::temp_directory_path() /
               ("sentinel-sim-" + std::to_string(::getpid()) + "-" + std::to_string(instance++));
    sessions_ = std::make_unique<gateway::SessionManager>(
        sc_.supervisors.roster, *notifier_, sc_.supervisors.base_url,
        gateway::GatewayLimits{.ttl = from_seconds(sc_.supervisors.session_ttl_s)}, this);
    orch_ = std::make_unique<orchestrator::Orchestrator>(
        sc_.configurations, runner_, clock_, liveness_,
        orchestrator::OrchestratorParams{.graceful_stop = kNanosPerSecond, .restart_attempts = 2, .scratch_root = scratch_});
    orch_->on_switch([this](const orchestrator::Configuration& c) { on_configuration(c); });
    node_ = sc_.map.dock();
    emit(metrics::EventKind::ModeChange, {{"from", "OFF"}, {"to", "CHARGING"}, {"reason", "start"}});
    auto report = orch_->activate(sc_.charging_config);
    emit(metrics::EventKind::ConfigSwitch,
         {{"from", ""}, {"to", sc_.charging_config}, {"started", report.starts()}, {"stopped", 0}});
  }

  ~Simulator() override {
    std::error_code ec;
    std::filesystem::remove_all(scratch_, ec);
  }

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Run to the horizon and close the log.
  void run() {
    while (t_ + dt() <= sc_.horizon()) step();
    finish();
  }

  /// Advance virtual time by one dt.
  void step() {
    t_ += dt();
    clock_.set(t_);
    process_faults();
    run_supervisors();
    expire_sessions();
    dynamics();
    if (mode_ != Mode::Off) supervise_and_tick();
  }

  /// Flush open records and mark the end of the run.
  void finish() {
    if (finished_) return;
    finished_ = true;
    flush_segment();
    emit(metrics::EventKind::ModeChange, {{"from", std::string(to_string(mode_))}, {"to", "OFF"}, {"reason", "end of run"}});
  }

  Nanos now() const { return t_; }
  Mode mode() const { return mode_; }
  double battery() const { return battery_; }
  double odometer() const { return odometer_; }
  Pose2D pose() const { return current_pose(); }
  const Scenario& scenario() const { return sc_; }
  const bt::Arbiter& arbiter() const { return *arbiter_; }
  const orchestrator::Orchestrator& orchestrator() const { return *orch_; }
  orchestrator::FakeRunner& runner() { return runner_; }
  gateway::SessionManager& sessions() { return *sessions_; }
  const gateway::RecordingNotifier& notifications() const { return recording_; }
  std::shared_ptr<const monitor::AggregatedStatus> status() const { return bus_.latest(); }
  int docking_attempts() const { return attempt_no_; }
  bool localization_lost() const { return !loc_faults_.empty(); }
  bool navigation_blocked() const { return !nav_faults_.empty(); }

  // ActionSink
  void dispatch(std::uint64_t handle, const bt::Dispatch& d) override {
    const std::string action(bt::to_string(d.action.id));
    emit(metrics::EventKind::ActionDispatch, {{"handle", handle},
                                              {"error_class", d.error_class},
                                              {"step", d.step},
                                              {"action", action},
                                              {"target", d.target},
                                              {"category", class_category(d.error_class)}});
    using bt::RecoveryId;
    switch (d.action.id) {
      case RecoveryId::RestartNode: {
        std::string outcome = "completed";
        try {
          auto r = orch_->restart_entity(d.target);
          if (r.final_state != orchestrator::ProcessState::Running) outcome = "failed";
          on_entity_started(d.target);
        } catch (const ConfigurationDrift&) {
          outcome = "failed";
        }
        complete(handle, action, outcome);
        break;
      }
      case RecoveryId::RestartLocalization: {
        if (orch_->active().find("localization")) {
          orch_->restart_entity("localization");
          on_entity_started("localization");
        }
        resolve_faults(RecoveryId::RestartLocalization);
        complete(handle, action, "completed");
        break;
      }
      case RecoveryId::ResyncClock:
        skew_ms_ = 0.0;
        std::erase_if(clock_faults_, [](const ActiveFault& f) { return f.spec.duration_s <= 0; });
        next_due_.erase("clock/skew");
        for (const auto& m : declared_)
          if (m.kind == monitor::MonitorKind::ClockSkew) next_due_[m.id] = t_;
        complete(handle, action, "completed");
        break;
      case RecoveryId::SwitchConfiguration:
        switch_to(d.target, "recovery");
        complete(handle, action, "completed");
        break;
      case RecoveryId::Wait:
        motion_ = MotionAction{handle, d.action.id, t_ + from_seconds(d.action.params.duration_s), 0.0, 0.0, 0.0};
        break;
      case RecoveryId::MoveBack: {
        const double v = sc_.robot.move_back_speed;
        motion_ = MotionAction{handle, d.action.id, t_ + from_seconds(d.action.params.distance_m / v), -v, 0.0, 0.0};
        break;
      }
      case RecoveryId::RotateSlow:
        motion_ = MotionAction{handle, d.action.id, t_ + from_seconds(d.action.params.duration_s), 0.0,
                               d.action.params.angular_rate, 0.0};
        break;
      case RecoveryId::RequestSupervisor:
        request_supervisor(d);
        break;
    }
  }

  void cancel(std::uint64_t handle, const bt::RunningAction& a, const std::string& reason) override {
    if (motion_ && motion_->handle == handle) {
      close_motion();
      motion_.reset();
    }
    emit(metrics::EventKind::ActionResult,
         {{"handle", handle}, {"action", std::string(bt::to_string(a.action))}, {"outcome", "cancelled"}, {"reason", reason}});
  }

  // StackInterface
  void set_pose(const gateway::InterventionSession& s, const gateway::SetPose&) override {
    intervention(true, "set_pose", s.id, s.error_class);
    loc_faults_.clear();
  }

  void teleop(const gateway::InterventionSession& s, const gateway::Teleop& t) override {
    intervention(true, "teleop", s.id, s.error_class);
    const double d = std::abs(t.v) * t.duration_s;
    if (!next_.empty() && d > 0) {
      progress_ = std::min(progress_ + d, edge_length_ - 1e-6);
      odometer_ += d;
      emit(metrics::EventKind::OdometryDelta, {{"distance", metrics::round6(d)},
                                               {"duration", metrics::round6(t.duration_s)},
                                               {"speed", metrics::round6(std::abs(t.v))},
                                               {"mode", "RECOVERING"},
                                               {"from", node_},
                                               {"to", next_}});
    }
    nav_faults_.clear();
  }

  void resolved(const gateway::InterventionSession& s) override {
    if (arbiter_) arbiter_->supervisor_resolved(s.error_class);
    emit(metrics::EventKind::SupervisorResolution,
         {{"session", s.id}, {"error_class", s.error_class}, {"state", "RESOLVED"}, {"resolver", s.resolver}});
  }

 private:
  struct ActiveFault {
    FaultSpec spec;
    Nanos started = 0;
    std::optional<Nanos> ends;
  };

  struct MotionAction {
    std::uint64_t handle = 0;
    bt::RecoveryId id = bt::RecoveryId::Wait;
    Nanos end = 0;
    double v = 0.0;
    double omega = 0.0;
    double moved = 0.0;
  };

  struct Deadlock {
    std::string target;
    Nanos end = 0;
    Nanos delay = 0;
    std::optional<Nanos> kill_at;
  };

  struct Channel {
    std::string entity;
    double nominal_hz = 1.0;
    monitor::RateWindow window{30, 1.0};
    std::optional<Nanos> next_arrival;
  };

  struct Agent {
    std::string session;
    std::string error_class;
    std::string supervisor;
    Nanos engage_at = 0;
    bool engaged = false;
    Nanos confirm_at = 0;
  };

  Nanos dt() const { return sc_.dt(); }

  // -- events --------------------------------------------------------------

  void emit(metrics::EventKind kind, metrics::Payload data, bool with_pose = true) {
    metrics::Event e;
    e.t = t_;
    e.kind = kind;
    if (with_pose) {
      const Pose2D p = current_pose();
      e.pose = metrics::EventPose{metrics::round6(p.x), metrics::round6(p.y), metrics::round6(p.theta)};
    }
    e.data = std::move(data);
    sink_->emit(std::move(e));
  }

  void intervention(bool requested, const std::string& action, const std::string& session, const std::string& cls) {
    metrics::Payload d{{"requested", requested}, {"action", action}};
    if (!session.empty()) d["session"] = session;
    if (!cls.empty()) d["error_class"] = cls;
    emit(metrics::EventKind::ManualIntervention, std::move(d));
  }

  void set_mode(Mode m, const std::string& reason) {
    if (m == mode_) return;
    flush_segment();
    emit(metrics::EventKind::ModeChange,
         {{"from", std::string(to_string(mode_))}, {"to", std::string(to_string(m))}, {"reason", reason}});
    mode_ = m;
  }

  void complete(std::uint64_t handle, const std::string& action, const std::string& outcome) {
    emit(metrics::EventKind::ActionResult, {{"handle", handle}, {"action", action}, {"outcome", outcome}});
    finished_handles_.push_back(handle);
  }

  // -- map motion ----------------------------------------------------------

  Pose2D current_pose() const {
    const auto& a = sc_.map.node(node_).pose;
    if (next_.empty()) return Pose2D(a.x, a.y, heading_);
    const auto& b = sc_.map.node(next_).pose;
    const double f = edge_length_ > 0 ? progress_ / edge_length_ : 0.0;
    return Pose2D(a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f, heading_);
  }

  void enter_edge(const std::string& to) {
    next_ = to;
    progress_ = 0.0;
    edge_length_ = sc_.map.edge(node_, to).length;
    const auto& a = sc_.map.node(node_).pose;
    const auto& b = sc_.map.node(to).pose;
    heading_ = std::atan2(b.y - a.y, b.x - a.x);
    if (seg_time_ == 0.0) seg_from_ = node_;
  }

  double edge_speed() const {
    if (next_.empty()) return sc_.robot.patrol_speed;
    return std::min(sc_.robot.patrol_speed, sc_.map.edge(node_, next_).speed);
  }

  void flush_segment() {
    if (seg_time_ <= 0.0) return;
    const std::string mode(to_string(seg_mode_));
    emit(metrics::EventKind::OdometryDelta, {{"distance", metrics::round6(seg_dist_)},
                                             {"duration", metrics::round6(seg_time_)},
                                             {"speed", metrics::round6(seg_dist_ / seg_time_)},
                                             {"mode", mode},
                                             {"from", seg_from_},
                                             {"to", next_.empty() ? node_ : next_}});
    if (seg_mode_ == Mode::Patrol) {
      const double h = seg_time_ / 3600.0;
      const auto mask = people_rng_.poisson(sc_.people.mask_per_h * h);
      const auto no_mask = people_rng_.poisson(sc_.people.no_mask_per_h * h);
      if (mask + no_mask > 0) emit(metrics::EventKind::DetectionCount, {{"mask", mask}, {"no_mask", no_mask}});
    }
    seg_dist_ = 0.0;
    seg_time_ = 0.0;
    seg_from_ = next_.empty() ? node_ : node_;
  }

  /// Drive `seconds` along the current edge and route. Returns true on
  /// arrival at the dock while docking.
  bool drive(double seconds) {
    if (next_.empty()) return false;
    double budget = seconds;
    seg_mode_ = mode_;
    while (budget > 1e-12 && !next_.empty()) {
      const double v = edge_speed();
      const double left = edge_length_ - progress_;
      const double can = v * budget;
      if (can < left) {
        progress_ += can;
        account(can, budget);
        budget = 0;
        break;
      }
      const double used = left / v;
      account(left, used);
      budget -= used;
      arrive();
      if (mode_ == Mode::Docking && next_.empty()) return node_ == sc_.map.dock();
    }
    return false;
  }

  void account(double dist, double secs) {
    seg_dist_ += dist;
    seg_time_ += secs;
    odometer_ += dist;
    battery_ -= sc_.battery.motion_rate() * secs;
  }

  void arrive() {
    const std::string from = node_;
    node_ = next_;
    next_.clear();
    progress_ = 0.0;
    flush_segment();
    seg_from_ = node_;
    if (mode_ == Mode::Patrol) {
      enter_edge(next_waypoint(sc_.map, node_, from, rng_));
      previous_ = from;
    } else if (mode_ == Mode::Docking && !route_.empty()) {
      const auto n = route_.front();
      route_.pop_front();
      enter_edge(n);
    }
  }

  // -- robot dynamics ------------------------------------------------------

  bool on_duty() const { return sc_.schedule.on_duty(t_); }

  double remaining_duty_s() const {
    for (const auto& iv : sc_.schedule.intervals(t_, t_ + kNanosPerDay))
      if (iv.begin <= t_ && t_ < iv.end) return to_seconds(iv.end - t_);
    return 0.0;
  }

  bool in_window(const std::vector<metrics::Interval>& w) const {
    for (const auto& iv : w)
      if (iv.begin <= t_ && t_ < iv.end) return true;
    return false;
  }

  void dynamics() {
    const double secs = to_seconds(dt());
    if (motion_) run_motion(secs);
    switch (mode_) {
      case Mode::Off:
        if (t_ >= off_until_) {
          intervention(false, "switch_on", "", "");
          power_on();
          set_mode(Mode::Docking, "switched on");
          begin_attempt();
        }
        return;
      case Mode::Charging:
        battery_ = std::min(1.0, battery_ + sc_.battery.charge_rate() * secs);
        if (contact_lost_) {
          contact_lost_ = false;
          set_mode(Mode::Docking, "charging contact lost");
          begin_attempt();
        } else if (should_undock()) {
          undock();
        }
        return;
      case Mode::Patrol: {
        const bool low = battery_ <= sc_.battery.dock_threshold;
        const bool suppressed = in_window(signal_loss_);
        if ((low || !on_duty()) && !suppressed) {
          start_transit(low ? "low battery" : "end of duty");
        } else if (suppressed && battery_ <= sc_.battery.critical) {
          intervention(false, "manual_dock_command", "", "");
          start_transit("manual command");
        }
        if (mode_ == Mode::Patrol) {
          if (nav_faults_.empty()) {
            drive(secs);
          } else {
            flush_segment();
            idle(secs);
          }
        } else if (mode_ == Mode::Docking && attempt_end_) {
          return;
        } else {
          transit(secs);
        }
        return;
      }
      case Mode::Docking:
        if (attempt_end_) {
          if (t_ >= *attempt_end_) finish_attempt();
        } else {
          transit(secs);
        }
        return;
      case Mode::Recovering:
      case Mode::Error:
        if (!motion_) idle(secs);
        return;
    }
  }

  void idle(double secs) { battery_ = std::max(0.0, battery_ - sc_.battery.idle_rate() * secs); }

  void transit(double secs) {
    if (drive(secs)) begin_attempt();
    battery_ = std::max(0.0, battery_);
  }

  void run_motion(double secs) {
    auto& m = *motion_;
    const bool moving = m.v != 0.0 || m.omega != 0.0;
    if (moving) {
      battery_ = std::max(0.0, battery_ - sc_.battery.motion_rate() * secs);
      if (m.v != 0.0 && !next_.empty()) {
        const double d = std::min(std::abs(m.v) * secs, m.v < 0 ? progress_ : edge_length_ - progress_);
        progress_ += m.v < 0 ? -d : d;
        m.moved += d;
        odometer_ += d;
      }
      heading_ += m.omega * secs;
    } else if (mode_ == Mode::Recovering || mode_ == Mode::Error) {
      idle(secs);
    }
    if (t_ >= m.end) {
      close_motion();
      const auto handle = m.handle;
      const auto id = m.id;
      motion_.reset();
      emit(metrics::EventKind::ActionResult,
           {{"handle", handle}, {"action", std::string(bt::to_string(id))}, {"outcome", "completed"}});
      resolve_faults(id);
      if (arbiter_) arbiter_->finished(handle);
    }
  }

  void close_motion() {
    if (motion_ && motion_->moved > 0) {
      const double secs = motion_->moved / std::max(std::abs(motion_->v), 1e-9);
      emit(metrics::EventKind::OdometryDelta, {{"distance", metrics::round6(motion_->moved)},
                                               {"duration", metrics::round6(secs)},
                                               {"speed", metrics::round6(std::abs(motion_->v))},
                                               {"mode", "RECOVERING"},
                                               {"from", node_},
                                               {"to", next_.empty() ? node_ : next_}});
      motion_->moved = 0;
    }
    if (!next_.empty()) {
      const auto& a = sc_.map.node(node_).pose;
      const auto& b = sc_.map.node(next_).pose;
      heading_ = std::atan2(b.y - a.y, b.x - a.x);
    }
  }

  bool should_undock() const {
    if (!on_duty()) return false;
    const double remaining = remaining_duty_s();
    if (remaining < sc_.battery.min_session_s) return false;
    const auto& b = sc_.battery;
    const double need = b.dock_threshold + b.resume_margin + remaining * b.motion_rate();
    return battery_ >= std::min(b.resume_level, need);
  }

  void undock() {
    switch_to(sc_.patrol_config, "undock");
    set_mode(Mode::Patrol, "undock");
    node_ = sc_.map.dock();
    previous_.clear();
    enter_edge(next_waypoint(sc_.map, node_, previous_, rng_));
  }

  void start_transit(const std::string& reason) {
    set_mode(Mode::Docking, reason);
    route_.clear();
    if (next_.empty() && node_ == sc_.map.dock()) {
      begin_attempt();
      return;
    }
    const std::string via = next_.empty() ? node_ : next_;
    auto path = sc_.map.shortest_path(via, sc_.map.dock()).first;
    route_.assign(path.begin() + 1, path.end());
    if (next_.empty() && !route_.empty()) {
      const auto n = route_.front();
      route_.pop_front();
      enter_edge(n);
    }
  }

  // -- docking -------------------------------------------------------------

  void begin_attempt() {
    if (orch_->active_name() != sc_.charging_config) switch_to(sc_.charging_config, "docking");
    ++attempt_no_;
    node_ = sc_.map.dock();
    next_.clear();
    route_.clear();
    const std::uint64_t seed = sc_.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(attempt_no_);
    Rng draw(seed);
    const auto& dm = sc_.docking;
    constexpr double deg = docking::kPi / 180.0;
    const Pose2D start = docking::frontal_pose(dm.landmark, draw.uniform(dm.range_min, dm.range_max),
                                               draw.uniform(-dm.bearing_deg, dm.bearing_deg) * deg,
                                               draw.uniform(-dm.heading_deg, dm.heading_deg) * deg);
    docking::DockingFault fault;
    for (const auto& [iv, mag] : slip_windows_)
      if (iv.begin <= t_ && t_ < iv.end) fault = {docking::DockingFaultKind::WheelSlip, mag};
    attempt_ = docking::simulate_docking(start, dm.landmark, dm.params, fault, draw.bits());
    attempt_slip_ = fault.magnitude;
    attempt_end_ = t_ + std::max(dt(), from_seconds(std::ceil(attempt_->duration_s)));
  }

  void finish_attempt() {
    const auto out = *attempt_;
    attempt_.reset();
    attempt_end_.reset();
    battery_ = std::max(0.0, battery_ - sc_.battery.motion_rate() * out.duration_s);
    odometer_ += out.distance_m;
    if (out.duration_s > 0)
      emit(metrics::EventKind::OdometryDelta, {{"distance", metrics::round6(out.distance_m)},
                                               {"duration", metrics::round6(out.duration_s)},
                                               {"speed", metrics::round6(out.distance_m / out.duration_s)},
                                               {"mode", "DOCKING"},
                                               {"from", "approach"},
                                               {"to", node_}});
    emit(metrics::EventKind::DockingAttempt, {{"attempt", attempt_no_},
                                              {"success", out.docked},
                                              {"reason", out.reason},
                                              {"position_error", metrics::round6(out.position_error)},
                                              {"heading_error", metrics::round6(out.heading_error)},
                                              {"duration_s", metrics::round6(out.duration_s)},
                                              {"word", std::string(docking::to_string(out.word))},
                                              {"slip", attempt_slip_}});
    if (out.docked) {
      set_mode(Mode::Charging, "docked");
    } else {
      set_mode(Mode::Off, "emergency shutdown after failed docking");
      off_until_ = t_ + from_seconds(sc_.docking.switch_on_delay_s);
    }
  }

  void power_on() {
    resample_all_ = true;
    for (auto& [name, ch] : channels_) {
      ch.window.clear();
      ch.next_arrival.reset();
    }
  }

  // -- configuration -------------------------------------------------------

  void switch_to(const std::string& name, const std::string& reason) {
    const auto from = orch_->active_name();
    if (from == name) return;
    auto rep = orch_->switch_configuration(name);
    emit(metrics::EventKind::ConfigSwitch,
         {{"from", from}, {"to", name}, {"reason", reason}, {"started", rep.starts()}, {"stopped", rep.stops()}});
  }

  void on_configuration(const orchestrator::Configuration& c) {
    declared_ = c.declared_monitors();
    bus_.reconfigure(declared_);
    if (arbiter_)
      arbiter_->reconfigure(c.tree, declared_);
    else
      arbiter_ = std::make_unique<bt::Arbiter>(c.tree, declared_, *this);
    categories_.clear();
    for (const auto& cls : arbiter_->definition().classes) {
      std::string cat = "system";
      for (const auto& m : cls.monitors)
        for (const auto& d : declared_)
          if (d.id == m && d.kind == monitor::MonitorKind::Navigation) cat = "navigation";
          else if (d.id == m && d.kind == monitor::MonitorKind::Localization && cat == "system") cat = "localization";
      categories_[cls.name] = cat;
    }
    std::map<std::string, Channel> channels;
    for (const auto& e : c.entities)
      for (const auto& o : e.outputs) {
        auto it = channels_.find(o.name);
        if (it != channels_.end() && it->second.entity == e.id)
          channels.emplace(o.name, std::move(it->second));
        else
          channels.emplace(o.name, Channel{e.id, o.rate_hz, monitor::RateWindow(30, o.rate_hz), std::nullopt});
      }
    channels_ = std::move(channels);
    std::erase_if(levels_, [&](const auto& kv) {
      for (const auto& d : declared_)
        if (d.id == kv.first) return false;
      return true;
    });
    resample_all_ = true;
  }

  std::string class_category(const std::string& cls) const {
    auto it = categories_.find(cls);
    return it == categories_.end() ? "system" : it->second;
  }

  void on_entity_started(const std::string& id) {
    for (auto& [name, ch] : channels_)
      if (ch.entity == id) {
        ch.window.clear();
        ch.next_arrival.reset();
      }
    if (deadlock_ && deadlock_->target == id && t_ < deadlock_->end) deadlock_->kill_at = t_ + deadlock_->delay;
  }

  // -- faults --------------------------------------------------------------

  bool precondition(const FaultSpec& f) {
    switch (f.kind) {
      case FaultKind::ProcessCrash:
      case FaultKind::DeadlockRestartLoop:
        return mode_ != Mode::Off && !deadlock_ &&
               orch_->state(f.target) == orchestrator::ProcessState::Running && runner_.alive(f.target);
      case FaultKind::LocalizationLoss:
      case FaultKind::NavigationBlock:
        return mode_ == Mode::Patrol && !next_.empty() && !motion_;
      case FaultKind::ChargeContactLoss:
        return mode_ == Mode::Charging;
      default:
        return true;
    }
  }

  void process_faults() {
    const auto& faults = sc_.faults;
    while (next_fault_ < faults.size() && faults[next_fault_].time <= t_) deferred_.push_back(faults[next_fault_++]);
    for (auto it = deferred_.begin(); it != deferred_.end();) {
      if (precondition(*it)) {
        activate(*it);
        it = deferred_.erase(it);
      } else {
        ++it;
      }
    }
    auto expired = [&](const ActiveFault& f) { return f.ends && t_ >= *f.ends; };
    std::erase_if(loc_faults_, expired);
    std::erase_if(nav_faults_, expired);
    std::erase_if(clock_faults_, expired);
    for (auto it = rate_faults_.begin(); it != rate_faults_.end();)
      it = expired(it->second) ? rate_faults_.erase(it) : std::next(it);
    for (const auto& f : clock_faults_) skew_ms_ += f.spec.magnitude * to_seconds(dt());
    if (deadlock_) {
      if (t_ >= deadlock_->end) {
        const auto target = deadlock_->target;
        deadlock_.reset();
        intervention(false, "manual_restart", "", "");
        if (orch_->active().find(target)) {
          orch_->restart_entity(target);
          on_entity_started(target);
        }
      } else if (deadlock_->kill_at && t_ >= *deadlock_->kill_at) {
        runner_.kill(deadlock_->target);
        deadlock_->kill_at.reset();
      }
    }
  }

  void activate(const FaultSpec& f) {
    ActiveFault a{f, t_, std::nullopt};
    if (f.duration_s > 0) a.ends = t_ + from_seconds(f.duration_s);
    switch (f.kind) {
      case FaultKind::ProcessCrash: runner_.kill(f.target); break;
      case FaultKind::DeadlockRestartLoop:
        runner_.kill(f.target);
        deadlock_ = Deadlock{f.target, *a.ends, from_seconds(f.magnitude), std::nullopt};
        break;
      case FaultKind::RateDegrade: rate_faults_.insert_or_assign(f.target, a); break;
      case FaultKind::ClockDrift: clock_faults_.push_back(a); break;
      case FaultKind::LocalizationLoss:
        if (f.resolve_by) a.ends.reset();
        loc_faults_.push_back(a);
        break;
      case FaultKind::NavigationBlock:
        if (f.resolve_by) a.ends.reset();
        nav_faults_.push_back(a);
        break;
      case FaultKind::DockingSlip: slip_windows_.push_back({{t_, *a.ends}, f.magnitude}); break;
      case FaultKind::DockSignalLoss: signal_loss_.push_back({t_, *a.ends}); break;
      case FaultKind::ChargeContactLoss: contact_lost_ = true; break;
    }
  }

  void resolve_faults(bt::RecoveryId by) {
    auto match = [&](const ActiveFault& f) { return f.spec.resolve_by && *f.spec.resolve_by == by; };
    std::erase_if(loc_faults_, match);
    std::erase_if(nav_faults_, match);
  }

  // -- supervisors ---------------------------------------------------------

  void request_supervisor(const bt::Dispatch& d) {
    metrics::Payload snap{{"mode", std::string(to_string(mode_))}, {"battery", metrics::round6(battery_)}};
    if (auto s = bus_.latest()) {
      metrics::Payload bad = metrics::Payload::object();
      for (const auto& [id, r] : s->entries)
        if (r.level != monitor::MonitorLevel::Ok) bad[id] = std::string(monitor::to_string(r.level));
      snap["monitors"] = bad;
    }
    const bool storm = arbiter_->history().storm_active(t_, arbiter_->definition().storm);
    auto r = sessions_->open_session(d.error_class, snap, t_);
    emit(metrics::EventKind::SupervisorRequest, {{"session", r.session_id},
                                                 {"error_class", d.error_class},
                                                 {"created", r.created},
                                                 {"notified", r.notifications},
                                                 {"reason", storm ? "storm" : "exhausted"}});
    const auto& roster = sc_.supervisors.roster;
    if (r.created && !roster.empty()) {
      Agent a;
      a.session = r.session_id;
      a.error_class = d.error_class;
      a.supervisor = roster[supervisor_rng_.below(roster.size())].id;
      a.engage_at = t_ + from_seconds(supervisor_rng_.uniform(sc_.supervisors.latency_min_s, sc_.supervisors.latency_max_s));
      agents_.push_back(a);
    }
  }

  bool class_clear(const std::string& cls) const {
    if (mode_ == Mode::Off || !arbiter_) return true;
    const auto* c = bt::find_class(arbiter_->definition(), cls);
    auto snap = bus_.latest();
    if (!c || !snap) return true;
    return !bt::condition_holds({cls, c->monitors, c->trigger, bt::ConditionBinding::Mode::AnyAtLeast}, *snap);
  }

  void run_supervisors() {
    for (auto it = agents_.begin(); it != agents_.end();) {
      auto& a = *it;
      auto s = sessions_->get(a.session);
      if (!s || !s->open()) {
        it = agents_.erase(it);
        continue;
      }
      if (!a.engaged && t_ >= a.engage_at) {
        sessions_->engage(a.session, a.supervisor);
        a.engaged = true;
        a.confirm_at = t_ + from_seconds(sc_.supervisors.confirm_after_s);
        const auto cat = class_category(a.error_class);
        const Pose2D p = current_pose();
        if (cat == "localization")
          sessions_->handle_action(a.session, a.supervisor, gateway::SetPose{p.x, p.y, p.theta}, t_);
        else if (cat == "navigation")
          sessions_->handle_action(a.session, a.supervisor, gateway::Teleop{0.3, 0.0, 5.0}, t_);
      }
      if (a.engaged && t_ >= a.confirm_at && class_clear(a.error_class)) {
        sessions_->handle_action(a.session, a.supervisor, gateway::ConfirmFix{}, t_);
        it = agents_.erase(it);
        continue;
      }
      ++it;
    }
  }

  void expire_sessions() {
    for (const auto& id : sessions_->expire_sessions(t_, from_seconds(sc_.supervisors.session_ttl_s))) {
      auto s = sessions_->get(id);
      if (!s) continue;
      if (arbiter_) arbiter_->supervisor_resolved(s->error_class);
      emit(metrics::EventKind::SupervisorResolution,
           {{"session", id}, {"error_class", s->error_class}, {"state", "EXPIRED"}, {"resolver", ""}});
    }
  }

  // -- monitoring ----------------------------------------------------------

  double monitor_value(const monitor::MonitorSpec& m) const {
    switch (m.kind) {
      case monitor::MonitorKind::Cpu: return 30.0 + 5.0 * std::sin(to_seconds(t_) / 600.0);
      case monitor::MonitorKind::Ram: return 45.0;
      case monitor::MonitorKind::Localization: return loc_faults_.empty() ? 0.9 : 0.1;
      case monitor::MonitorKind::Navigation: return nav_faults_.empty() ? 0.0 : 1.0;
      default: return 0.0;
    }
  }

  bool due(const monitor::MonitorSpec& m) {
    auto it = next_due_.find(m.id);
    if (resample_all_ || it == next_due_.end() || t_ >= it->second) {
      next_due_[m.id] = t_ + m.period;
      return true;
    }
    return false;
  }

  void feed_channel(Channel& ch, const std::string& name) {
    const bool up = orch_->state(ch.entity) == orchestrator::ProcessState::Running && runner_.alive(ch.entity);
    if (!up) {
      ch.next_arrival.reset();
      return;
    }
    double hz = ch.nominal_hz;
    if (auto it = rate_faults_.find(name); it != rate_faults_.end()) hz *= it->second.spec.magnitude;
    if (hz <= 0) {
      ch.next_arrival.reset();
      return;
    }
    const Nanos period = std::max<Nanos>(1, from_seconds(1.0 / hz));
    if (!ch.next_arrival || *ch.next_arrival < t_ - dt()) ch.next_arrival = t_ - dt() + period;
    while (*ch.next_arrival <= t_) {
      ch.window.push(*ch.next_arrival);
      *ch.next_arrival += period;
    }
  }

  void supervise_and_tick() {
    for (auto& r : orch_->supervise()) bus_.publish(std::move(r));
    for (const auto& m : declared_) {
      switch (m.kind) {
        case monitor::MonitorKind::Liveness: break;
        case monitor::MonitorKind::Rate: {
          auto it = channels_.find(m.id.substr(m.id.find('/') + 1));
          if (it == channels_.end()) break;
          auto& ch = it->second;
          const auto nd = next_due_.find(m.id);
          const bool soon = resample_all_ || nd == next_due_.end() || nd->second - t_ <= 3 * kNanosPerSecond;
          if (soon) feed_channel(ch, it->first);
          if (due(m)) {
            ch.window.prune_before(t_ - 10 * kNanosPerSecond);
            bus_.publish(monitor::rate_report(ch.window, m.band, m.id, m.entity_id, t_));
          }
          break;
        }
        case monitor::MonitorKind::ClockSkew:
          if (due(m)) {
            const Nanos off = from_seconds(skew_ms_ / 1000.0);
            monitor::TimeExchange x{t_, t_ + off + 1'000'000, t_ + off + 1'100'000, t_ + 2'100'000};
            bus_.publish(monitor::clock_skew_report(x, m.band, m.id, m.entity_id, t_));
          }
          break;
        default:
          if (m.event_driven()) {
            const double v = monitor_value(m);
            auto it = last_value_.find(m.id);
            if (resample_all_ || it == last_value_.end() || it->second != v) {
              last_value_[m.id] = v;
              bus_.publish(monitor::sample_report(m, v, t_));
            }
          } else if (due(m)) {
            bus_.publish(monitor::sample_report(m, monitor_value(m), t_));
          }
          break;
      }
    }
    resample_all_ = false;
    const auto snap = bus_.pump(t_);
    for (const auto& [id, r] : snap->entries) {
      auto it = levels_.find(id);
      if (it != levels_.end() && it->second == r.level) continue;
      levels_[id] = r.level;
      emit(metrics::EventKind::MonitorReport, {{"monitor", id},
                                               {"entity", r.entity_id},
                                               {"level", std::string(monitor::to_string(r.level))},
                                               {"value", metrics::round6(r.value)},
                                               {"message", r.message}},
           false);
    }
    const auto report = arbiter_->tick(*snap, t_);
    for (auto h : finished_handles_) arbiter_->finished(h);
    finished_handles_.clear();
    follow_tick(report.status);
  }

  void follow_tick(bt::TickStatus status) {
    const bool transit = mode_ == Mode::Patrol || (mode_ == Mode::Docking && !attempt_end_);
    switch (status) {
      case bt::TickStatus::Running:
        if (transit) {
          resume_ = mode_;
          set_mode(Mode::Recovering, "error handling");
        } else if (mode_ == Mode::Error) {
          set_mode(Mode::Recovering, "error handling");
        }
        break;
      case bt::TickStatus::Failure:
        if (transit) {
          resume_ = mode_;
          set_mode(Mode::Error, "recovery exhausted");
        } else if (mode_ == Mode::Recovering) {
          set_mode(Mode::Error, "recovery exhausted");
        }
        break;
      case bt::TickStatus::Success:
        if ((mode_ == Mode::Recovering || mode_ == Mode::Error) && !motion_) {
          close_motion();
          set_mode(resume_, "recovered");
        }
        break;
    }
  }

  Scenario sc_;
  metrics::EventSink* sink_;
  gateway::RecordingNotifier recording_;
  gateway::Notifier* notifier_;
  Rng rng_;
  Rng people_rng_;
  Rng supervisor_rng_;

  ManualClock clock_;
  Nanos t_ = 0;
  bool finished_ = false;
  std::filesystem::path scratch_;

  orchestrator::FakeRunner runner_;
  monitor::LivenessTracker liveness_;
  monitor::StatusBus bus_;
  std::unique_ptr<orchestrator::Orchestrator> orch_;
  std::unique_ptr<bt::Arbiter> arbiter_;
  std::unique_ptr<gateway::SessionManager> sessions_;
  std::vector<monitor::MonitorSpec> declared_;
  std::map<std::string, std::string> categories_;
  std::map<std::string, Channel> channels_;
  std::map<std::string, Nanos> next_due_;
  std::map<std::string, double> last_value_;
  std::map<std::string, monitor::MonitorLevel> levels_;
  bool resample_all_ = true;
  std::vector<std::uint64_t> finished_handles_;

  Mode mode_ = Mode::Charging;
  Mode resume_ = Mode::Patrol;
  double battery_;
  double odometer_ = 0.0;
  std::string node_;
  std::string next_;
  std::string previous_;
  double progress_ = 0.0;
  double edge_length_ = 0.0;
  double heading_ = 0.0;
  std::deque<std::string> route_;
  double seg_dist_ = 0.0;
  double seg_time_ = 0.0;
  Mode seg_mode_ = Mode::Patrol;
  std::string seg_from_;
  std::optional<MotionAction> motion_;

  int attempt_no_ = 0;
  std::optional<docking::DockingOutcome> attempt_;
  std::optional<Nanos> attempt_end_;
  double attempt_slip_ = 0.0;
  Nanos off_until_ = 0;

  std::size_t next_fault_ = 0;
  std::vector<FaultSpec> deferred_;
  std::vector<ActiveFault> loc_faults_;
  std::vector<ActiveFault> nav_faults_;
  std::vector<ActiveFault> clock_faults_;
  std::map<std::string, ActiveFault> rate_faults_;
  std::optional<Deadlock> deadlock_;
  std::vector<std::pair<metrics::Interval, double>> slip_windows_;
  std::vector<metrics::Interval> signal_loss_;
  bool contact_lost_ = false;
  double skew_ms_ = 0.0;

  std::vector<Agent> agents_;
};

/// Run a scenario to completion and return its event log.
inline std::vector<metrics::Event> run_scenario(const Scenario& scenario) {
  metrics::MemoryLog log;
  Simulator sim(scenario, log);
  sim.run();
  return log.take();
}

}  // namespace sentinel::sim
