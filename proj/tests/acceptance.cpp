#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "bt_fixtures.hpp"
#include "oracles/dubins.hpp"
#include "oracles/recovery.hpp"
#include "sentinel/docking/docking_sim.hpp"
#include "sentinel/metrics/report.hpp"
#include "sentinel/orchestrator/orchestrator.hpp"
#include "sentinel/orchestrator/runner.hpp"
#include "sentinel/sim/scenario_io.hpp"
#include "sentinel/sim/simulator.hpp"

using namespace sentinel;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

using docking::kPi;
constexpr double kDeg = kPi / 180.0;

Verdict dubins() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const docking::Pose2D s{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-kPi, kPi)};
    const docking::Pose2D g{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-kPi, kPi)};
    const double R = rng.uniform(0.1, 3.0);
    worst = std::max(worst, std::abs(docking::plan_dubins(s, g, R).length() - oracle::oracle_dubins(s, g, R)));
  }
  const double dt = seconds_since(t0);
  return {worst <= 1e-9 && dt < 5.0, fmt::format("1000 cases, max |diff| {:.2e}, {:.3f} s", worst, dt)};
}

Verdict docking_round_trip() {
  using namespace docking;
  const TriangleLandmark lm;
  Rng rng(21);
  double worst = 0.0;
  int missed = 0;
  for (int i = 0; i < 300; ++i) {
    const double range = rng.uniform(0.8, 3.5);
    const double bearing = rng.uniform(-100, 100) * kDeg;
    const double view = rng.uniform(-35, 35) * kDeg;
    const Pose2D truth{range * std::cos(bearing), range * std::sin(bearing), bearing + kPi + view};
    ScannerModel m;
    m.noise_sigma = 0.0;
    const auto det = detect_landmark(synthesize_scan(Pose2D{}, docking_scene(lm, truth), m, nullptr), lm);
    if (!det.pose) {
      ++missed;
      continue;
    }
    worst = std::max({worst, std::abs(det.pose->x - truth.x), std::abs(det.pose->y - truth.y),
                      std::abs(angle_diff(det.pose->theta, truth.theta))});
  }
  Rng cone(99);
  int docked = 0;
  const int runs = 100;
  for (int i = 0; i < runs; ++i) {
    const Pose2D start = frontal_pose(lm, cone.uniform(1.0, 3.0), cone.uniform(-30, 30) * kDeg, cone.uniform(-20, 20) * kDeg);
    DockingParams p;
    p.scanner.noise_sigma = 0.005;
    const auto out = simulate_docking(start, lm, p, {}, 1000 + i);
    if (out.docked && out.position_error <= 0.02 && out.heading_error <= 3 * kDeg) ++docked;
  }
  return {missed == 0 && worst <= 1e-6 && docked >= 95,
          fmt::format("noiseless max err {:.2e} ({} missed); sigma 5 mm docked {}/{}", worst, missed, docked, runs)};
}

Verdict recovery_classifier() {
  Rng rng(20240611);
  std::size_t checked = 0, disagree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto log = oracle::random_log(rng, 1 + rng.below(10'000));
    const auto fast = metrics::classify_recoveries(log);
    const auto slow = oracle::brute_force(log);
    if (fast.size() != slow.size()) return {false, fmt::format("log {}: {} vs {} outcomes", trial, fast.size(), slow.size())};
    for (std::size_t i = 0; i < fast.size(); ++i) {
      ++checked;
      disagree += fast[i].success != slow[i].first || fast[i].missing_pose != slow[i].second;
    }
  }
  return {disagree == 0, fmt::format("100 logs, {} dispatches, {} disagreements", checked, disagree)};
}

Verdict bt_semantics() {
  using namespace fixtures;
  using bt::RecoveryId;
  const auto t0 = Clock::now();
  const auto def = definition();
  std::vector<std::string> failures;
  Rng rng(4242);

  // Priority: with several classes in error, the first declared one acts.
  for (int trial = 0; trial < 500; ++trial) {
    std::map<std::string, MonitorLevel> levels;
    std::string expected;
    for (const auto& c : def.classes) {
      if (rng.uniform() < 0.5) continue;
      for (const auto& m : c.monitors) levels[m] = MonitorLevel::Error;
      if (expected.empty()) expected = c.name;
    }
    RecordingSink sink;
    bt::Arbiter arb(def, monitors(), sink);
    const auto r = arb.tick(snapshot(1, 0, levels), 0);
    const std::string got = r.dispatched ? r.dispatched->error_class : "";
    if (got != expected) failures.push_back(fmt::format("priority trial {}: {} != {}", trial, got, expected));
  }

  // Reactivity: a running recovery is cancelled on the first tick its error clears.
  for (int trial = 0; trial < 500; ++trial) {
    RecordingSink sink;
    bt::Arbiter arb(def, monitors(), sink);
    const auto& cls = def.classes[rng.below(def.classes.size())];
    std::map<std::string, MonitorLevel> bad;
    for (const auto& m : cls.monitors) bad[m] = MonitorLevel::Error;
    const int hold = 1 + static_cast<int>(rng.below(5));
    std::uint64_t seq = 0;
    Nanos t = 0;
    for (int k = 0; k < hold; ++k, t += kNanosPerSecond) arb.tick(snapshot(++seq, t, bad), t);
    const bool was_running = !arb.running().empty();
    const auto r = arb.tick(snapshot(++seq, t), t);
    if (!was_running || r.cancelled.size() != 1 || !arb.running().empty())
      failures.push_back(fmt::format("reactivity trial {} ({})", trial, cls.name));
  }

  // Last resort: the supervisor request only ever closes a chain, and a node
  // that keeps dying is restarted at most `threshold` times per window.
  for (const auto& cfg : sim::default_configurations())
    for (const auto& c : cfg.tree.classes)
      for (std::size_t i = 0; i + 1 < c.chain.size(); ++i)
        if (c.chain[i].id == RecoveryId::RequestSupervisor)
          failures.push_back("supervisor before end of chain: " + cfg.name + "/" + c.name);
  // Exhaustion: under a persistent error, the supervisor is only asked once
  // every earlier step of the chain has spent its budget in this episode.
  for (const auto& cfg : sim::default_configurations()) {
    const auto declared = cfg.declared_monitors();
    for (const auto& cls : cfg.tree.classes) {
      if (cls.chain.back().id != RecoveryId::RequestSupervisor) continue;
      RecordingSink sink;
      bt::Arbiter arb(cfg.tree, declared, sink);
      std::map<RecoveryId, int> used;
      bool asked = false;
      for (int k = 0; k < 600 && !asked; ++k) {
        const Nanos t = k * kNanosPerSecond;
        monitor::AggregatedStatus snap;
        snap.sequence = static_cast<std::uint64_t>(k) + 1;
        snap.timestamp = t;
        for (const auto& m : declared) {
          const bool bad = std::find(cls.monitors.begin(), cls.monitors.end(), m.id) != cls.monitors.end() &&
                           (m.kind != monitor::MonitorKind::Liveness || m.id == cls.monitors.front());
          snap.entries.emplace(m.id, monitor::MonitorReport{m.id, m.entity_id, 0.0, m.unit,
                                                            bad ? MonitorLevel::Error : MonitorLevel::Ok, t, ""});
        }
        auto r = arb.tick(snap, t);
        if (!r.dispatched) continue;
        arb.finished(*r.handle);
        const auto id = r.dispatched->action.id;
        if (id == RecoveryId::RequestSupervisor) {
          asked = true;
          for (std::size_t i = 0; i + 1 < cls.chain.size(); ++i)
            if (!r.storm && used[cls.chain[i].id] != cls.chain[i].budget)
              failures.push_back(fmt::format("{}/{}: supervisor after {}/{} {}", cfg.name, cls.name,
                                             used[cls.chain[i].id], cls.chain[i].budget, bt::to_string(cls.chain[i].id)));
        } else {
          ++used[id];
        }
      }
      if (!asked) failures.push_back(fmt::format("{}/{}: chain never reached the supervisor", cfg.name, cls.name));
    }
  }

  if (def.storm.window != 180 * kNanosPerSecond || def.storm.threshold != 10)
    failures.push_back("storm guard is not 10 restarts / 180 s");
  int storms = 0;
  for (int trial = 0; trial < 20; ++trial) {
    RecordingSink sink;
    bt::Arbiter arb(def, monitors(), sink);
    const int down = 3 + static_cast<int>(rng.below(12));
    std::uint64_t seq = 0;
    Nanos t = 0;
    std::vector<Nanos> restarts;
    bool supervisor = false, storm = false;
    for (int cycle = 0; cycle < 60 && !supervisor; ++cycle) {
      for (int k = 0; k <= down && !supervisor; ++k, t += kNanosPerSecond) {
        const std::map<std::string, MonitorLevel> lv =
            k == 0 ? std::map<std::string, MonitorLevel>{}
                   : std::map<std::string, MonitorLevel>{{"alive/navigation", MonitorLevel::Error}};
        auto r = arb.tick(snapshot(++seq, t, lv), t);
        if (!r.dispatched) continue;
        arb.finished(*r.handle);
        if (r.dispatched->action.id == RecoveryId::RestartNode) restarts.push_back(t);
        if (r.dispatched->action.id == RecoveryId::RequestSupervisor) {
          supervisor = true;
          storm = r.storm;
        }
      }
    }
    std::size_t densest = 0;
    for (std::size_t i = 0; i < restarts.size(); ++i) {
      std::size_t j = i;
      while (j < restarts.size() && restarts[j] - restarts[i] <= def.storm.window) ++j;
      densest = std::max(densest, j - i);
    }
    if (!supervisor || densest > def.storm.threshold || (storm && densest != def.storm.threshold))
      failures.push_back(fmt::format("storm trial {} (down {} s): densest {}, supervisor {}", trial, down, densest, supervisor));
    storms += storm;
  }
  if (storms == 0) failures.push_back("no trial reached the storm guard");

  const double dt = seconds_since(t0);
  if (dt >= 10.0) failures.push_back(fmt::format("took {:.2f} s", dt));
  return {failures.empty(), failures.empty() ? fmt::format("priority, reactivity, exhaustion and storm properties, {:.3f} s", dt) : failures.front()};
}

std::string replay_path() { return std::string(SENTINEL_SOURCE_DIR) + "/scenarios/deployment_replay.yaml"; }

std::string run_replay(double* wall_s = nullptr, metrics::MetricsReport* rep = nullptr) {
  const auto sc = sim::load_scenario(replay_path());
  metrics::MemoryLog log;
  const auto t0 = Clock::now();
  sim::Simulator(sc, log).run();
  if (wall_s) *wall_s = seconds_since(t0);
  if (rep) *rep = metrics::report(log.events(), sc.schedule);
  return log.serialize();
}

std::string replay_log;

Verdict deployment_replay() {
  double wall = 0;
  metrics::MetricsReport r;
  replay_log = run_replay(&wall, &r);
  const auto restart = r.recovery("restart_node");
  const double pct = restart.rate();
  const bool ok = r.docking_attempts == 28 && r.docking_successes == 27 && std::abs(pct - 62.5) <= 0.1 &&
                  r.supervisor_requests >= 9 && r.unplanned_interventions == 4 && r.autonomy_pct >= 67 &&
                  r.autonomy_pct <= 71 && std::abs(r.distance_m - 66'600) <= 6'660 && wall < 60;
  return {ok, fmt::format("docking {}/{}, restart {:.1f}%, supervisor {}, unplanned {}, A {:.1f}%, {:.1f} km, {:.1f} s",
                          r.docking_attempts, r.docking_successes, pct, r.supervisor_requests,
                          r.unplanned_interventions, r.autonomy_pct, r.distance_m / 1000, wall)};
}

Verdict determinism() {
  if (replay_log.empty()) replay_log = run_replay();
  const auto again = run_replay();
  return {!replay_log.empty() && again == replay_log,
          fmt::format("deployment replay twice: {} bytes, {}", again.size(), again == replay_log ? "identical" : "differ")};
}

std::vector<orchestrator::Configuration> configs() {
  using orchestrator::Configuration;
  auto make = [](const std::string& name, std::vector<std::string> ids) {
    Configuration c;
    c.name = name;
    for (auto& id : ids) {
      orchestrator::EntitySpec e;
      e.id = id;
      e.command = {"true"};
      e.heartbeat_channel = "/" + id + "/heartbeat";
      e.startup_grace_s = 0.1;
      c.entities.push_back(e);
    }
    return c;
  };
  return {make("normal", {"base", "localization", "navigation", "jetson_bridge"}),
          make("charging", {"base", "jetson_bridge", "docking"}),
          make("mapping", {"base", "jetson_bridge", "mapper"}),
          make("minimal", {"base"})};
}

std::filesystem::path scratch() {
  auto p = std::filesystem::temp_directory_path() / ("sentinel-acceptance-" + std::to_string(::getpid()));
  std::filesystem::create_directories(p);
  return p;
}

Verdict orchestrator_exactness() {
  using namespace orchestrator;
  const auto all = configs();
  int mismatches = 0, switches = 0;
  Rng rng(77);
  for (int seq = 0; seq < 100; ++seq) {
    ManualClock clock{0};
    FakeRunner runner;
    monitor::LivenessTracker liveness{3 * kNanosPerSecond};
    Orchestrator orch(all, runner, clock, liveness, OrchestratorParams{5 * kNanosPerSecond, 2, scratch()});
    orch.activate(all[rng.below(all.size())].name);
    const int len = 1 + static_cast<int>(rng.below(20));
    for (int k = 0; k < len; ++k) {
      const auto& target = all[rng.below(all.size())];
      orch.switch_configuration(target.name);
      ++switches;
      const auto want = target.entity_ids();
      if (orch.running_entities() != want || runner.running() != want) ++mismatches;
    }
  }

  ManualClock clock{0};
  FakeRunner runner;
  monitor::LivenessTracker liveness{3 * kNanosPerSecond};
  Orchestrator orch(all, runner, clock, liveness, OrchestratorParams{5 * kNanosPerSecond, 2, scratch()});
  orch.activate("normal");
  runner.set_behavior("navigation", {true, false});
  std::atomic<bool> blocked{false};
  std::promise<void> release;
  auto gate = release.get_future().share();
  runner.set_ready_delay([&](const EntitySpec& spec) {
    if (spec.id == "navigation") {
      blocked = true;
      gate.wait();
    }
  });
  auto restart = std::async(std::launch::async, [&] { return orch.restart_entity("navigation"); });
  while (!blocked) std::this_thread::yield();
  const Nanos period = kNanosPerSecond;
  double worst = 0.0;
  bool heartbeats = true;
  for (int i = 1; i <= 5; ++i) {
    clock.set(i * period);
    const auto t0 = Clock::now();
    orch.supervise();
    worst = std::max(worst, seconds_since(t0));
    for (const char* peer : {"base", "localization", "jetson_bridge"})
      heartbeats = heartbeats && liveness.last_heartbeat(peer) == i * period;
  }
  release.set_value();
  const bool failed = restart.get().final_state == ProcessState::Failed;
  std::filesystem::remove_all(scratch());
  const bool ok = mismatches == 0 && heartbeats && failed && worst < to_seconds(period);
  return {ok, fmt::format("{} switches, {} mismatches; crash loop: peer heartbeats {}, worst supervise {:.4f} s",
                          switches, mismatches, heartbeats ? "on time" : "late", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"dubins-oracle", dubins},
      {"docking-round-trip", docking_round_trip},
      {"recovery-classifier", recovery_classifier},
      {"bt-semantics", bt_semantics},
      {"deployment-replay", deployment_replay},
      {"determinism", determinism},
      {"orchestrator-exactness", orchestrator_exactness},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
