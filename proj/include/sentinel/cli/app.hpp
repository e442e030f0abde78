#pragma once

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sentinel/cli/daemon.hpp"
#include "sentinel/docking/records.hpp"
#include "sentinel/metrics/report.hpp"
#include "sentinel/metrics/schedule_io.hpp"
#include "sentinel/metrics/store.hpp"
#include "sentinel/sim/scenario_io.hpp"
#include "sentinel/sim/simulator.hpp"

namespace sentinel::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kStoreEnv = "LTA_SENTINEL_STORE";
inline constexpr const char* kDefaultStore = "sentinel-events.jsonl";

/// --out, else $LTA_SENTINEL_STORE, else the default file name.
inline std::string store_path(const std::string& out) {
  if (!out.empty()) return out;
  if (const char* env = std::getenv(kStoreEnv); env && *env) return env;
  return kDefaultStore;
}

/// "d3 10:15:02.250" relative to day 0 of the log.
inline std::string format_time(Nanos t) {
  const long long ms = t / 1'000'000;
  const long long day = ms / 86'400'000;
  const long long rem = ms % 86'400'000;
  return fmt::format("d{} {:02}:{:02}:{:02}.{:03}", day, rem / 3'600'000, rem / 60'000 % 60, rem / 1000 % 60,
                     rem % 1000);
}

inline std::string format_event_human(const metrics::Event& e) {
  std::string out = fmt::format("{} {:<20}", format_time(e.t), metrics::to_string(e.kind));
  for (const auto& [k, v] : e.data.items()) out += " " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump());
  return out;
}

struct CliState {
  std::string format = "human";
  std::string scenario;
  std::string config;
  std::string out;
  std::string log;
  std::optional<std::uint64_t> seed;
  double accel = 0.0;
  // daemon
  std::string active;
  std::string listen = "127.0.0.1:8080";
  std::string token;
  std::string admin_socket;
  std::string static_dir;
  std::vector<std::string> supervisors;
  bool webhooks = false;
  bool no_http = false;
  double duration = 0.0;
  // replay
  std::vector<std::string> kinds;
  // dock-demo
  int count = 1;
};

inline std::atomic<bool>& stop_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

/// Sleeps so that virtual time `t` is reached no earlier than wall time
/// start + t / accel.
class Pacer {
 public:
  explicit Pacer(double accel) : accel_(accel), start_(std::chrono::steady_clock::now()) {}
  void wait_for(Nanos t) const {
    if (accel_ <= 0) return;
    std::this_thread::sleep_until(start_ + std::chrono::nanoseconds(static_cast<Nanos>(static_cast<double>(t) / accel_)));
  }

 private:
  double accel_;
  std::chrono::steady_clock::time_point start_;
};

inline void print_report(const metrics::MetricsReport& r, const std::string& format, std::ostream& out) {
  out << (format == "machine" ? metrics::to_machine(r) : metrics::to_table(r));
}

inline int cmd_sim(const CliState& s, std::ostream& out, std::ostream& err) {
  sim::Scenario sc;
  try {
    sc = sim::load_scenario(s.scenario);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (s.seed) sc.seed = *s.seed;
  const auto path = store_path(s.out);
  metrics::MemoryLog log;
  {
    sim::Simulator simulator(sc, log);
    const Pacer pacer(s.accel);
    while (simulator.now() + sc.dt() <= sc.horizon() && !stop_flag().load()) {
      simulator.step();
      pacer.wait_for(simulator.now());
    }
    simulator.finish();
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    err << "error: cannot write " << path << "\n";
    return kExitFailure;
  }
  file << log.serialize();
  file.close();
  if (s.format == "human") err << "wrote " << log.events().size() << " events to " << path << "\n";
  print_report(metrics::report(log.events(), sc.schedule), s.format, out);
  return kExitOk;
}

inline int cmd_report(const CliState& s, std::ostream& out, std::ostream& err) {
  metrics::DutySchedule schedule = metrics::DutySchedule::office_hours();
  std::vector<metrics::Event> events;
  try {
    if (!s.scenario.empty()) schedule = sim::load_scenario(s.scenario).schedule;
    if (!s.config.empty()) schedule = metrics::load_schedule_text(yaml::read_file(s.config), s.config);
    events = metrics::read_log(s.log);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  print_report(metrics::report(events, schedule), s.format, out);
  return kExitOk;
}

inline int cmd_replay(const CliState& s, std::ostream& out, std::ostream& err) {
  for (const auto& k : s.kinds)
    if (!metrics::parse_event_kind(k)) {
      err << "error: unknown event kind '" << k << "'\n";
      return kExitUsage;
    }
  try {
    metrics::LogReader reader(s.log);
    std::optional<Nanos> first;
    const Pacer pacer(s.accel);
    while (auto e = reader.next()) {
      if (stop_flag().load()) break;
      if (!first) first = e->t;
      pacer.wait_for(e->t - *first);
      if (!s.kinds.empty() &&
          std::find(s.kinds.begin(), s.kinds.end(), std::string(metrics::to_string(e->kind))) == s.kinds.end())
        continue;
      out << (s.format == "machine" ? metrics::encode_event(*e) : format_event_human(*e)) << "\n";
      out.flush();
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

inline int cmd_dock_demo(const CliState& s, std::ostream& out, std::ostream& err) {
  docking::DockingRecord rec;
  if (!s.scenario.empty()) {
    try {
      rec = docking::load_docking_record(s.scenario);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  } else {
    Rng rng(s.seed.value_or(1));
    constexpr double deg = docking::kPi / 180.0;
    rec.start = docking::frontal_pose(rec.landmark, rng.uniform(1.0, 3.0), rng.uniform(-30.0, 30.0) * deg,
                                      rng.uniform(-20.0, 20.0) * deg);
    rec.seed = rng.bits();
  }
  if (s.seed && !s.scenario.empty()) rec.seed = *s.seed;
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  int docked = 0;
  std::vector<docking::Pose2D> first_trajectory;
  for (int i = 0; i < s.count; ++i) {
    const auto o = docking::simulate_docking(rec.start, rec.landmark, rec.params, rec.fault, rec.seed + static_cast<std::uint64_t>(i),
                                                i == 0 && !s.out.empty());
    if (i == 0) first_trajectory = o.trajectory;
    docked += o.docked ? 1 : 0;
    nlohmann::ordered_json j;
    j["run"] = i;
    j["docked"] = o.docked;
    j["reason"] = o.reason;
    j["word"] = std::string(docking::to_string(o.word));
    j["position_error_m"] = metrics::round6(o.position_error);
    j["heading_error_deg"] = metrics::round6(o.heading_error * 180.0 / docking::kPi);
    j["duration_s"] = metrics::round6(o.duration_s);
    j["distance_m"] = metrics::round6(o.distance_m);
    runs.push_back(j);
    if (s.format == "human")
      out << fmt::format("run {:>3}  {:<8} {:<4} pos {:.4f} m  heading {:.2f} deg  {:.1f} s{}\n", i,
                         o.docked ? "docked" : "FAILED", docking::to_string(o.word), o.position_error,
                         o.heading_error * 180.0 / docking::kPi, o.duration_s,
                         o.reason.empty() ? "" : "  (" + o.reason + ")");
  }
  if (s.format == "machine") {
    nlohmann::ordered_json doc;
    doc["start"] = {metrics::round6(rec.start.x), metrics::round6(rec.start.y), metrics::round6(rec.start.theta)};
    doc["seed"] = rec.seed;
    doc["runs"] = runs;
    doc["docked"] = docked;
    out << doc.dump(2) << "\n";
  } else {
    out << fmt::format("start ({:.3f}, {:.3f}, {:.1f} deg)  docked {}/{}\n", rec.start.x, rec.start.y,
                       rec.start.theta * 180.0 / docking::kPi, docked, s.count);
  }
  if (!s.out.empty()) {
    std::ofstream f(s.out, std::ios::trunc);
    if (!f) {
      err << "error: cannot write " << s.out << "\n";
      return kExitFailure;
    }
    f << docking::format_polyline(first_trajectory);
  }
  return docked == s.count ? kExitOk : kExitFailure;
}

inline int cmd_daemon(const CliState& s, std::ostream& err) {
  DaemonOptions o;
  o.config = s.config;
  o.active = s.active;
  o.store = store_path(s.out);
  o.admin_socket = s.admin_socket;
  o.http_enabled = !s.no_http;
  o.http.token = s.token;
  o.http.static_dir = s.static_dir;
  const auto colon = s.listen.rfind(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument("listen");
    o.http.host = s.listen.substr(0, colon);
    o.http.port = std::stoi(s.listen.substr(colon + 1));
  } catch (const std::exception&) {
    err << "error: --listen expects HOST:PORT\n";
    return kExitUsage;
  }
  o.base_url = "http://" + s.listen;
  for (const auto& sup : s.supervisors) {
    const auto eq = sup.find('=');
    o.roster.push_back({sup.substr(0, eq), eq == std::string::npos ? "" : sup.substr(eq + 1)});
  }
  o.webhooks = s.webhooks;
  o.duration_s = s.duration;
  std::unique_ptr<Daemon> d;
  try {
    d = std::make_unique<Daemon>(o);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    return d->run(stop_flag());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

/// Parses argv and runs one subcommand. Usage errors exit with 2.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CliState s;
  CLI::App app{"Long-term autonomy supervision: daemon, simulator and metrics."};
  app.name("sentinel");
  app.require_subcommand(1, 1);

  auto add_format = [&](CLI::App* c) {
    c->add_option("--format", s.format, "Output format")->check(CLI::IsMember({"human", "machine"}))->capture_default_str();
  };

  auto* sim = app.add_subcommand("sim", "Run a simulation scenario and write its event log.");
  sim->add_option("--scenario", s.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  sim->add_option("--seed", s.seed, "Override the scenario seed");
  sim->add_option("--accel", s.accel, "Pace virtual time at this multiple of wall time (0: as fast as possible)")
      ->check(CLI::NonNegativeNumber);
  sim->add_option("--out", s.out, std::string("Event log path (default: $") + kStoreEnv + " or " + kDefaultStore + ")");
  add_format(sim);

  auto* rep = app.add_subcommand("report", "Compute long-term autonomy metrics from an event log.");
  rep->add_option("log", s.log, "Event log")->required()->check(CLI::ExistingFile);
  auto* rep_sc = rep->add_option("--scenario", s.scenario, "Take the duty schedule from this scenario")
                     ->check(CLI::ExistingFile);
  rep->add_option("--config", s.config, "Duty schedule file")->check(CLI::ExistingFile)->excludes(rep_sc);
  add_format(rep);

  auto* rpl = app.add_subcommand("replay", "Print the events of a log in order.");
  rpl->add_option("log", s.log, "Event log")->required()->check(CLI::ExistingFile);
  rpl->add_option("--accel", s.accel, "Pace events at this multiple of recorded time (0: no pacing)")
      ->check(CLI::NonNegativeNumber);
  rpl->add_option("--kind", s.kinds, "Only these event kinds (repeatable)");
  add_format(rpl);

  auto* dmn = app.add_subcommand("daemon", "Supervise real processes from a configuration file.");
  dmn->add_option("--config", s.config, "Configuration file")->required()->check(CLI::ExistingFile);
  dmn->add_option("--active", s.active, "Configuration to activate (default: the first)");
  dmn->add_option("--out", s.out, std::string("Event log path (default: $") + kStoreEnv + " or " + kDefaultStore + ")");
  dmn->add_option("--listen", s.listen, "Gateway HOST:PORT")->capture_default_str();
  dmn->add_flag("--no-http", s.no_http, "Do not start the gateway");
  dmn->add_option("--token", s.token, "Bearer token required by the gateway");
  dmn->add_option("--static", s.static_dir, "Directory served at / by the gateway");
  dmn->add_option("--admin-socket", s.admin_socket, "Unix socket for status/switch/restart/report commands");
  dmn->add_option("--supervisor", s.supervisors, "Roster entry ID[=WEBHOOK_URL] (repeatable)");
  dmn->add_flag("--webhooks", s.webhooks, "POST notifications to roster webhook URLs");
  dmn->add_option("--duration", s.duration, "Stop after this many seconds (0: run until signalled)")
      ->check(CLI::NonNegativeNumber);

  auto* dock = app.add_subcommand("dock-demo", "Run the docking controller in closed loop.");
  dock->add_option("--scenario", s.scenario, "Docking record file (default: random start in the frontal cone)")
      ->check(CLI::ExistingFile);
  dock->add_option("--seed", s.seed, "Random seed");
  dock->add_option("--out", s.out, "Write the first trajectory as x,y,theta CSV");
  dock->add_option("--count", s.count, "Number of runs")->check(CLI::PositiveNumber)->capture_default_str();
  add_format(dock);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  if (sim->parsed()) return cmd_sim(s, out, err);
  if (rep->parsed()) return cmd_report(s, out, err);
  if (rpl->parsed()) return cmd_replay(s, out, err);
  if (dock->parsed()) return cmd_dock_demo(s, out, err);
  if (dmn->parsed()) return cmd_daemon(s, err);
  return kExitUsage;
}

}  // namespace sentinel::cli
