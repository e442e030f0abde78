#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

#include "sentinel/orchestrator/admin_socket.hpp"
#include "sentinel/orchestrator/config_io.hpp"
#include "sentinel/orchestrator/orchestrator.hpp"
#include "sentinel/orchestrator/subprocess_runner.hpp"

using namespace sentinel;
using namespace sentinel::orchestrator;
using monitor::MonitorLevel;

namespace {

EntitySpec entity(const std::string& id) {
  EntitySpec e;
  e.id = id;
  e.command = {"true"};
  e.heartbeat_channel = "/" + id + "/heartbeat";
  e.startup_grace_s = 0.1;
  return e;
}

Configuration config(const std::string& name, std::initializer_list<const char*> ids) {
  Configuration c;
  c.name = name;
  for (const char* id : ids) c.entities.push_back(entity(id));
  return c;
}

std::vector<Configuration> standard_configs() {
  return {config("normal", {"base", "localization", "navigation", "jetson_bridge"}),
          config("charging", {"base", "jetson_bridge", "docking"}),
          config("mapping", {"base", "jetson_bridge", "mapper"})};
}

std::filesystem::path temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() /
           ("sentinel-test-" + tag + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

struct Rig {
  ManualClock clock{0};
  FakeRunner runner;
  monitor::LivenessTracker liveness{3 * kNanosPerSecond};
  Orchestrator orch;

  explicit Rig(std::vector<Configuration> configs = standard_configs())
      : orch(std::move(configs), runner, clock, liveness,
             OrchestratorParams{5 * kNanosPerSecond, 2, temp_dir("scratch")}) {}

  MonitorLevel level_of(const std::vector<monitor::MonitorReport>& reports, const std::string& id) {
    for (const auto& r : reports)
      if (r.entity_id == id) return r.level;
    return MonitorLevel::Stale;  // absent
  }
  bool reported(const std::vector<monitor::MonitorReport>& reports, const std::string& id) {
    for (const auto& r : reports)
      if (r.entity_id == id) return true;
    return false;
  }
};

std::set<std::string> stopped_in(const TransitionReport& r) {
  std::set<std::string> out;
  for (const auto& c : r.changes)
    if (c.to == ProcessState::Stopped) out.insert(c.entity_id);
  return out;
}
std::set<std::string> started_in(const TransitionReport& r) {
  std::set<std::string> out;
  for (const auto& c : r.changes)
    if (c.to == ProcessState::Running) out.insert(c.entity_id);
  return out;
}

}  // namespace

TEST(ProcessState, LegalTransitions) {
  using enum ProcessState;
  EXPECT_TRUE(legal_transition(Stopped, Starting));
  EXPECT_TRUE(legal_transition(Starting, Running));
  EXPECT_TRUE(legal_transition(Running, Stopping));
  EXPECT_TRUE(legal_transition(Stopping, Stopped));
  for (auto s : {Stopped, Starting, Running, Stopping}) EXPECT_TRUE(legal_transition(s, Failed));
  EXPECT_FALSE(legal_transition(Stopped, Running));
  EXPECT_FALSE(legal_transition(Running, Starting));
  EXPECT_FALSE(legal_transition(Stopping, Running));
}

TEST(Configuration, ValidationRejectsDuplicates) {
  auto c = config("x", {"a", "a"});
  EXPECT_THROW(c.validate(), Error);
  auto d = config("y", {"a", "b"});
  d.entities[1].heartbeat_channel = d.entities[0].heartbeat_channel;
  EXPECT_THROW(d.validate(), Error);
  auto g = config("z", {"a"});
  g.entities[0].startup_grace_s = 0;
  EXPECT_THROW(g.validate(), Error);
}

TEST(Configuration, DerivesLivenessAndRateMonitors) {
  auto c = config("x", {"nav"});
  c.entities[0].outputs.push_back({"/cmd_vel", 10.0});
  auto m = c.declared_monitors();
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].id, "alive/nav");
  EXPECT_EQ(m[1].id, "rate//cmd_vel");
  EXPECT_EQ(monitor::classify(10.0, m[1].band), MonitorLevel::Ok);
  EXPECT_EQ(monitor::classify(4.0, m[1].band), MonitorLevel::Error);
}

TEST(Switch, NormalToChargingStopsLocalization) {
  Rig rig;
  rig.orch.activate("normal");
  auto r = rig.orch.switch_configuration("charging");
  EXPECT_EQ(stopped_in(r), (std::set<std::string>{"localization", "navigation"}));
  EXPECT_EQ(started_in(r), (std::set<std::string>{"docking"}));
  EXPECT_FALSE(rig.runner.running().contains("localization"));
  EXPECT_EQ(rig.orch.active_name(), "charging");
}

TEST(Switch, IdenticalTargetIsEmpty) {
  Rig rig;
  rig.orch.activate("normal");
  auto r = rig.orch.switch_configuration("normal");
  EXPECT_TRUE(r.changes.empty());
}

TEST(Switch, SetDifferenceOneStopOneStart) {
  // normal2 and mapping2 share base and bridge; normal2 has localization, mapping2 has mapper.
  Rig rig({config("normal2", {"base", "bridge", "localization"}), config("mapping2", {"base", "bridge", "mapper"})});
  rig.orch.activate("normal2");
  const int base_starts = rig.runner.starts("base");
  auto r = rig.orch.switch_configuration("mapping2");
  EXPECT_EQ(r.stops(), 1u);
  EXPECT_EQ(r.starts(), 1u);
  EXPECT_EQ(rig.runner.starts("base"), base_starts);  // shared entity untouched
  EXPECT_EQ(rig.runner.stops("base"), 0);
}

TEST(Switch, RunningSetEqualsTargetAfterEverySwitch) {
  Rig rig;
  rig.orch.activate("normal");
  const std::vector<std::string> sequence = {"charging", "mapping", "normal", "mapping", "charging", "charging", "normal"};
  for (const auto& name : sequence) {
    rig.orch.switch_configuration(name);
    EXPECT_EQ(rig.orch.running_entities(), rig.orch.configuration(name)->entity_ids()) << name;
    EXPECT_EQ(rig.runner.running(), rig.orch.configuration(name)->entity_ids()) << name;
    EXPECT_FALSE(rig.orch.active_name().empty());
  }
}

TEST(Switch, StuckEntityIsFailedAndSwitchContinues) {
  Rig rig;
  rig.orch.activate("normal");
  rig.runner.set_behavior("localization", {false, true});
  auto r = rig.orch.switch_configuration("charging");
  EXPECT_EQ(r.failures(), 1u);
  EXPECT_EQ(rig.orch.state("localization"), ProcessState::Failed);
  EXPECT_EQ(rig.orch.state("navigation"), ProcessState::Stopped);
  EXPECT_EQ(rig.orch.state("docking"), ProcessState::Running);
  EXPECT_EQ(rig.orch.active_name(), "charging");
}

TEST(Switch, UnknownTargetRejected) {
  Rig rig;
  rig.orch.activate("normal");
  EXPECT_THROW(rig.orch.switch_configuration("nope"), ConfigurationDrift);
  EXPECT_EQ(rig.orch.active_name(), "normal");
}

TEST(Switch, HooksAndSwitchCallbackRun) {
  auto configs = standard_configs();
  configs[0].exit_hooks = {"save_map"};
  configs[1].entry_hooks = {"lower_speed"};
  Rig rig(configs);
  std::vector<std::string> ran;
  std::vector<std::string> swapped;
  rig.orch.set_hook_runner([&](const std::string& h) { ran.push_back(h); });
  rig.orch.on_switch([&](const Configuration& c) { swapped.push_back(c.name); });
  rig.orch.activate("normal");
  rig.orch.switch_configuration("charging");
  EXPECT_EQ(ran, (std::vector<std::string>{"save_map", "lower_speed"}));
  EXPECT_EQ(swapped, (std::vector<std::string>{"normal", "charging"}));
}

TEST(Restart, HealthyEntityOneStopOneStart) {
  Rig rig;
  rig.orch.activate("normal");
  const auto before = rig.orch.history().size();
  auto r = rig.orch.restart_entity("navigation");
  EXPECT_EQ(r.final_state, ProcessState::Running);
  EXPECT_EQ(r.attempts, 1);
  int stops = 0, starts = 0;
  for (const auto& c : r.changes) {
    stops += c.to == ProcessState::Stopped;
    starts += c.to == ProcessState::Running;
  }
  EXPECT_EQ(stops, 1);
  EXPECT_EQ(starts, 1);
  EXPECT_EQ(rig.orch.history().size(), before + r.changes.size());
}

TEST(Restart, CrashLoopFailsAfterTwoAttempts) {
  Rig rig;
  rig.orch.activate("normal");
  rig.runner.set_behavior("navigation", {true, false});
  auto r = rig.orch.restart_entity("navigation");
  EXPECT_EQ(r.final_state, ProcessState::Failed);
  EXPECT_EQ(r.attempts, 2);
  EXPECT_EQ(rig.orch.state("navigation"), ProcessState::Failed);
  // surfaced as a persistent liveness error
  auto reports = rig.orch.supervise();
  EXPECT_EQ(rig.level_of(reports, "navigation"), MonitorLevel::Error);
  rig.clock.advance(60 * kNanosPerSecond);
  reports = rig.orch.supervise();
  EXPECT_EQ(rig.level_of(reports, "navigation"), MonitorLevel::Error);
}

TEST(Restart, UndeclaredIdIsDrift) {
  Rig rig;
  rig.orch.activate("normal");
  EXPECT_THROW(rig.orch.restart_entity("mapper"), ConfigurationDrift);
  EXPECT_THROW(rig.orch.restart_entity("ghost"), ConfigurationDrift);
}

TEST(Restart, ResetsLivenessClock) {
  Rig rig;
  rig.orch.activate("normal");
  rig.orch.supervise();
  EXPECT_TRUE(rig.liveness.last_heartbeat("navigation").has_value());
  rig.runner.mute("navigation", true);
  rig.clock.advance(10 * kNanosPerSecond);
  rig.orch.restart_entity("navigation");
  EXPECT_FALSE(rig.liveness.last_heartbeat("navigation").has_value());
}

TEST(Restart, PurgesScratchDirectory) {
  Rig rig;
  rig.orch.activate("normal");
  const auto dir = rig.orch.scratch_dir("navigation");
  std::ofstream(dir / "residue") << "stale";
  rig.orch.restart_entity("navigation");
  EXPECT_TRUE(std::filesystem::exists(dir));
  EXPECT_FALSE(std::filesystem::exists(dir / "residue"));
}

TEST(Supervise, HeartbeatStreamPerRunningEntity) {
  Rig rig({config("three", {"a", "b", "c"})});
  rig.orch.activate("three");
  auto reports = rig.orch.supervise();
  ASSERT_EQ(reports.size(), 3u);
  for (const auto& r : reports) EXPECT_EQ(r.level, MonitorLevel::Ok) << r.entity_id;
}

TEST(Supervise, KilledEntityErrorsWithinTimeout) {
  Rig rig;
  rig.orch.activate("normal");
  const Nanos kill_at = 7 * kNanosPerSecond;
  for (Nanos t = 0; t <= kill_at; t += kNanosPerSecond) {
    rig.clock.set(t);
    rig.orch.supervise();
  }
  rig.runner.kill("localization");
  rig.clock.set(kill_at + 3 * kNanosPerSecond);
  EXPECT_EQ(rig.level_of(rig.orch.supervise(), "localization"), MonitorLevel::Ok);
  rig.clock.set(kill_at + 3 * kNanosPerSecond + 1);
  auto reports = rig.orch.supervise();
  EXPECT_EQ(rig.level_of(reports, "localization"), MonitorLevel::Error);
  EXPECT_EQ(rig.level_of(reports, "navigation"), MonitorLevel::Ok);
}

TEST(Supervise, StoppingEntityExcluded) {
  Rig rig;
  rig.orch.activate("normal");
  rig.orch.supervise();
  std::promise<void> entered;
  std::promise<void> release;
  auto release_future = release.get_future().share();
  rig.runner.set_ready_delay([&](const EntitySpec& spec) {
    if (spec.id == "navigation") {
      entered.set_value();
      release_future.wait();
    }
  });
  auto restart = std::async(std::launch::async, [&] { return rig.orch.restart_entity("navigation"); });
  entered.get_future().wait();
  EXPECT_EQ(rig.orch.state("navigation"), ProcessState::Starting);
  rig.clock.advance(30 * kNanosPerSecond);
  auto reports = rig.orch.supervise();
  EXPECT_FALSE(rig.reported(reports, "navigation"));
  EXPECT_EQ(rig.level_of(reports, "base"), MonitorLevel::Ok);
  release.set_value();
  EXPECT_EQ(restart.get().final_state, ProcessState::Running);
}

TEST(Supervise, StoppedByDesignNotChecked) {
  Rig rig;
  rig.orch.activate("normal");
  rig.orch.switch_configuration("charging");
  auto reports = rig.orch.supervise();
  EXPECT_FALSE(rig.reported(reports, "localization"));
  EXPECT_TRUE(rig.reported(reports, "docking"));
}

TEST(Supervise, CrashLoopDoesNotBlockPeerHeartbeats) {
  Rig rig;
  rig.orch.activate("normal");
  rig.runner.set_behavior("navigation", {true, false});
  std::atomic<bool> blocked{false};
  std::promise<void> release;
  auto release_future = release.get_future().share();
  rig.runner.set_ready_delay([&](const EntitySpec& spec) {
    if (spec.id == "navigation") {
      blocked = true;
      release_future.wait();
    }
  });
  auto restart = std::async(std::launch::async, [&] { return rig.orch.restart_entity("navigation"); });
  while (!blocked) std::this_thread::yield();
  for (int i = 1; i <= 5; ++i) {
    rig.clock.set(i * kNanosPerSecond);
    auto start = std::chrono::steady_clock::now();
    auto reports = rig.orch.supervise();
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(500));
    EXPECT_EQ(rig.level_of(reports, "localization"), MonitorLevel::Ok);
    EXPECT_EQ(rig.liveness.last_heartbeat("base"), i * kNanosPerSecond);
  }
  release.set_value();
  EXPECT_EQ(restart.get().final_state, ProcessState::Failed);
}

TEST(SubprocessRunner, CleanStateRestartsAreByteIdentical) {
  const auto root = temp_dir("clean");
  ManualClock clock;
  monitor::LivenessTracker liveness;
  SubprocessRunner runner(root / "logs");
  EntitySpec e = entity("counter");
  // Prints the scratch contents and a persisted counter, then leaves residue.
  e.command = {"/bin/sh", "-c",
               "echo scratch: $(ls -A | tr '\\n' ' '); "
               "n=$(cat count 2>/dev/null || echo 0); echo count: $n; "
               "echo $((n+1)) > count; mkdir -p cache; echo x > cache/blob; "
               "echo ready; exec sleep 30"};
  e.startup_grace_s = 0.3;
  Configuration c;
  c.name = "live";
  c.entities = {e};
  Orchestrator orch({c}, runner, clock, liveness, {kNanosPerSecond, 2, root / "scratch"});
  orch.activate("live");
  auto read_log = [&] {
    std::ifstream in(runner.log_path("counter"));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string first = read_log();
  EXPECT_NE(first.find("count: 0"), std::string::npos) << first;
  ASSERT_EQ(orch.restart_entity("counter").final_state, ProcessState::Running);
  const std::string second = read_log();
  ASSERT_EQ(orch.restart_entity("counter").final_state, ProcessState::Running);
  const std::string third = read_log();
  EXPECT_EQ(first, second);
  EXPECT_EQ(second, third);
  EXPECT_TRUE(runner.alive("counter"));
}

TEST(SubprocessRunner, DirtyStateLeavesResidue) {
  const auto root = temp_dir("dirty");
  ManualClock clock;
  monitor::LivenessTracker liveness;
  SubprocessRunner runner(root / "logs");
  EntitySpec e = entity("counter");
  e.command = {"/bin/sh", "-c", "n=$(cat count 2>/dev/null || echo 0); echo count: $n; echo $((n+1)) > count; exec sleep 30"};
  e.startup_grace_s = 0.2;
  e.clean_state = false;
  Configuration c;
  c.name = "live";
  c.entities = {e};
  Orchestrator orch({c}, runner, clock, liveness, {kNanosPerSecond, 2, root / "scratch"});
  orch.activate("live");
  orch.restart_entity("counter");
  std::ifstream in(runner.log_path("counter"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "count: 1");
}

TEST(SubprocessRunner, CrashingBinaryFailsAfterTwoAttempts) {
  const auto root = temp_dir("crash");
  ManualClock clock;
  monitor::LivenessTracker liveness;
  SubprocessRunner runner(root / "logs");
  EntitySpec e = entity("crasher");
  e.command = {"/bin/sh", "-c", "exit 3"};
  e.startup_grace_s = 0.1;
  Configuration c;
  c.name = "live";
  c.entities = {e};
  Orchestrator orch({c}, runner, clock, liveness, {kNanosPerSecond, 2, root / "scratch"});
  orch.activate("live");
  EXPECT_EQ(orch.state("crasher"), ProcessState::Failed);
  auto r = orch.restart_entity("crasher");
  EXPECT_EQ(r.final_state, ProcessState::Failed);
  EXPECT_EQ(r.attempts, 2);
}

TEST(SubprocessRunner, StopIgnoringTermIsForced) {
  const auto root = temp_dir("term");
  SubprocessRunner runner(root / "logs");
  EntitySpec e = entity("stubborn");
  e.command = {"/bin/sh", "-c", "trap '' TERM; while true; do sleep 0.05; done"};
  ASSERT_TRUE(runner.start(e, root));
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  EXPECT_TRUE(runner.alive("stubborn"));
  EXPECT_TRUE(runner.stop("stubborn", kNanosPerSecond / 5));
  EXPECT_FALSE(runner.alive("stubborn"));
}

TEST(AdminSocket, CommandsOverLocalSocket) {
  Rig rig;
  rig.orch.activate("normal");
  const auto path = temp_dir("admin") / "admin.sock";
  AdminServer server(path, [&](const std::string& line) { return handle_admin_command(rig.orch, line); });

  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  std::strcpy(addr.sun_path, path.c_str());
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)), 0);
  auto ask = [&](const std::string& cmd) {
    const std::string line = cmd + "\n";
    ::send(fd, line.data(), line.size(), 0);
    std::string reply;
    char ch;
    while (::recv(fd, &ch, 1, 0) == 1 && ch != '\n') reply.push_back(ch);
    return nlohmann::json::parse(reply);
  };
  auto status = ask("status");
  EXPECT_EQ(status["active"], "normal");
  EXPECT_EQ(status["entities"]["localization"], "RUNNING");
  auto sw = ask("switch charging");
  EXPECT_TRUE(sw["ok"].get<bool>());
  EXPECT_EQ(sw["stopped"], 2);
  EXPECT_EQ(sw["started"], 1);
  auto rs = ask("restart docking");
  EXPECT_EQ(rs["state"], "RUNNING");
  auto bad = ask("restart localization");
  EXPECT_FALSE(bad["ok"].get<bool>());
  EXPECT_NE(bad["error"].get<std::string>().find("not declared"), std::string::npos);
  EXPECT_FALSE(ask("dance")["ok"].get<bool>());
  ::close(fd);
}

namespace {
const char* kConfigText = R"(name: normal
entities:
  - id: localization
    command: [amcl]
    outputs:
      - {channel: /amcl_pose, rate_hz: 10}
  - id: navigation
    command: [move_base]
    startup_grace_s: 4
monitors:
  - id: cpu/host
    kind: cpu
    band: {direction: high-is-bad, warn: 80, error: 95}
    unit: "%"
arbiter:
  classes:
    - name: node_down
      monitors: [alive/*]
      recoveries:
        - action: restart_node
        - action: request_supervisor
hooks:
  exit: [save_pose]
---
name: charging
entities:
  - id: docking
    command: [docker]
)";
}

TEST(ConfigIo, ParsesMultiDocument) {
  auto configs = load_configurations_text(kConfigText, "cfg.yaml");
  ASSERT_EQ(configs.size(), 2u);
  EXPECT_EQ(configs[0].name, "normal");
  EXPECT_EQ(configs[0].entities[0].outputs[0].rate_hz, 10.0);
  EXPECT_EQ(configs[0].entities[1].startup_grace_s, 4.0);
  EXPECT_EQ(configs[0].entities[0].heartbeat_channel, "/localization/heartbeat");
  EXPECT_EQ(configs[0].exit_hooks, std::vector<std::string>{"save_pose"});
  ASSERT_EQ(configs[0].tree.classes.size(), 1u);
  EXPECT_EQ(configs[0].tree.classes[0].monitors,
            (std::vector<std::string>{"alive/localization", "alive/navigation"}));
}

TEST(ConfigIo, RoundTrip) {
  auto configs = load_configurations_text(kConfigText, "cfg.yaml");
  const std::string dumped = dump_configurations(configs);
  auto again = load_configurations_text(dumped, "dump.yaml");
  ASSERT_EQ(again.size(), configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    EXPECT_EQ(again[i].entities, configs[i].entities);
    EXPECT_EQ(again[i].entry_hooks, configs[i].entry_hooks);
    EXPECT_EQ(again[i].exit_hooks, configs[i].exit_hooks);
    ASSERT_EQ(again[i].monitors.size(), configs[i].monitors.size());
    EXPECT_EQ(again[i].tree.classes.size(), configs[i].tree.classes.size());
  }
  EXPECT_EQ(dump_configurations(again), dumped);
}

TEST(ConfigIo, ErrorsCarryLineNumbers) {
  const std::string bad = "name: x\nentities:\n  - id: a\n    startup_grace_s: 0\n";
  try {
    load_configurations_text(bad, "bad.yaml");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  const std::string unknown = "name: x\nentities:\n  - id: a\n    colour: red\n";
  try {
    load_configurations_text(unknown, "bad.yaml");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
  }
  const std::string drift = "name: x\nentities:\n  - id: a\narbiter:\n  classes:\n    - name: c\n      monitors: [alive/b]\n      recoveries: [{action: wait}]\n";
  EXPECT_THROW(load_configurations_text(drift, "drift.yaml"), ParseError);
}
