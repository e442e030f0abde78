#pragma once

#include <filesystem>
#include <regex>
#include <string>

#include "sentinel/core/yaml_doc.hpp"
#include "sentinel/metrics/schedule_io.hpp"
#include "sentinel/orchestrator/config_io.hpp"
#include "sentinel/sim/scenario.hpp"

namespace sentinel::sim {

/// "d3 10:15", "d0 09:00:30" (day index from the start of the run) or plain seconds.
inline Nanos parse_fault_time(const YAML::Node& n, const yaml::Reader& rd) {
  const auto text = rd.as<std::string>(n, "at");
  static const std::regex re(R"(^\s*d(\d+)\s+(\d{1,2}):(\d{2})(?::(\d{2}))?\s*$)");
  std::smatch m;
  if (std::regex_match(text, m, re)) {
    const long day = std::stol(m[1]);
    const int hh = std::stoi(m[2]);
    const int mm = std::stoi(m[3]);
    const int ss = m[4].matched ? std::stoi(m[4]) : 0;
    if (hh > 23 || mm > 59 || ss > 59) rd.fail(n, "bad time of day in '" + text + "'");
    return day * kNanosPerDay + from_seconds(hh * 3600.0 + mm * 60.0 + ss);
  }
  try {
    std::size_t used = 0;
    const double s = std::stod(text, &used);
    if (used == text.size()) return from_seconds(s);
  } catch (const std::exception&) {
  }
  rd.fail(n, "bad fault time '" + text + "' (expected 'd<day> HH:MM[:SS]' or seconds)");
}

inline TopoMap parse_map(const YAML::Node& n, const yaml::Reader& rd) {
  rd.only_keys(n, {"nodes", "edges"});
  std::vector<MapNode> nodes;
  std::vector<MapEdge> edges;
  for (const auto& v : rd.sequence(n, "nodes", true)) {
    rd.only_keys(v, {"id", "x", "y", "kind"});
    MapNode node;
    node.id = rd.get<std::string>(v, "id");
    node.pose = Pose2D(rd.get<double>(v, "x"), rd.get<double>(v, "y"), 0.0);
    const auto kind = rd.get_or<std::string>(v, "kind", "waypoint");
    auto k = parse_node_kind(kind);
    if (!k) rd.fail(v["kind"], "unknown node kind '" + kind + "'");
    node.kind = *k;
    nodes.push_back(std::move(node));
  }
  for (const auto& e : rd.sequence(n, "edges", true)) {
    rd.only_keys(e, {"a", "b", "length", "speed"});
    edges.push_back({rd.get<std::string>(e, "a"), rd.get<std::string>(e, "b"), rd.get_or<double>(e, "length", 0.0),
                     rd.get_or<double>(e, "speed", 0.5)});
    if (e["length"] && !(edges.back().length > 0)) rd.fail(e["length"], "edge length must be positive");
  }
  try {
    return TopoMap(std::move(nodes), std::move(edges));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& err) {
    rd.fail(n, err.what());
  }
}

inline FaultSpec parse_fault(const YAML::Node& n, const yaml::Reader& rd) {
  rd.only_keys(n, {"at", "kind", "target", "magnitude", "duration_s", "resolve_by"});
  FaultSpec f;
  f.line = n.Mark().line + 1;
  f.time = parse_fault_time(rd.require(n, "at"), rd);
  const auto kind = rd.get<std::string>(n, "kind");
  auto k = parse_fault_kind(kind);
  if (!k) rd.fail(n["kind"], "unknown fault kind '" + kind + "'");
  f.kind = *k;
  f.target = rd.get_or<std::string>(n, "target", "");
  f.magnitude = rd.get_or<double>(n, "magnitude", f.kind == FaultKind::DeadlockRestartLoop ? 5.0 : 0.0);
  f.duration_s = rd.get_or<double>(n, "duration_s", 0.0);
  if (n["resolve_by"]) {
    const auto r = rd.get<std::string>(n, "resolve_by");
    if (r == "supervisor") {
      f.resolve_by = bt::RecoveryId::RequestSupervisor;
    } else {
      f.resolve_by = bt::parse_recovery(r);
      if (!f.resolve_by) rd.fail(n["resolve_by"], "unknown recovery '" + r + "'");
    }
  }
  return f;
}

/// `base_dir` resolves a relative `configurations:` path.
inline Scenario parse_scenario(const YAML::Node& doc, const yaml::Reader& rd, const std::filesystem::path& base_dir = {}) {
  rd.only_keys(doc, {"name", "note", "seed", "horizon_days", "dt_s", "schedule", "map", "robot", "battery", "docking",
                     "people", "supervisors", "configurations", "patrol_config", "charging_config", "faults"});
  Scenario s;
  s.name = rd.get_or<std::string>(doc, "name", s.name);
  s.note = rd.get_or<std::string>(doc, "note", "");
  s.seed = rd.get_or<std::uint64_t>(doc, "seed", s.seed);
  s.horizon_days = rd.get_or<double>(doc, "horizon_days", s.horizon_days);
  s.dt_s = rd.get_or<double>(doc, "dt_s", s.dt_s);
  if (doc["schedule"]) s.schedule = metrics::parse_schedule(doc["schedule"], rd);
  if (doc["map"]) s.map = parse_map(doc["map"], rd);

  if (const auto r = doc["robot"]) {
    rd.only_keys(r, {"patrol_speed", "move_back_speed"});
    s.robot.patrol_speed = rd.get_or<double>(r, "patrol_speed", s.robot.patrol_speed);
    s.robot.move_back_speed = rd.get_or<double>(r, "move_back_speed", s.robot.move_back_speed);
  }
  if (const auto b = doc["battery"]) {
    rd.only_keys(b, {"capacity_h", "idle_h", "charge_per_h", "dock_threshold", "critical", "resume_level",
                     "resume_margin", "min_session_s", "initial"});
    auto& m = s.battery;
    m.capacity_h = rd.get_or<double>(b, "capacity_h", m.capacity_h);
    m.idle_h = rd.get_or<double>(b, "idle_h", m.idle_h);
    m.charge_per_h = rd.get_or<double>(b, "charge_per_h", m.charge_per_h);
    m.dock_threshold = rd.get_or<double>(b, "dock_threshold", m.dock_threshold);
    m.critical = rd.get_or<double>(b, "critical", m.critical);
    m.resume_level = rd.get_or<double>(b, "resume_level", m.resume_level);
    m.resume_margin = rd.get_or<double>(b, "resume_margin", m.resume_margin);
    m.min_session_s = rd.get_or<double>(b, "min_session_s", m.min_session_s);
    m.initial = rd.get_or<double>(b, "initial", m.initial);
  }
  if (const auto d = doc["docking"]) {
    rd.only_keys(d, {"range_min", "range_max", "bearing_deg", "heading_deg", "switch_on_delay_s", "speed",
                     "approach_distance", "noise_sigma"});
    auto& m = s.docking;
    m.range_min = rd.get_or<double>(d, "range_min", m.range_min);
    m.range_max = rd.get_or<double>(d, "range_max", m.range_max);
    m.bearing_deg = rd.get_or<double>(d, "bearing_deg", m.bearing_deg);
    m.heading_deg = rd.get_or<double>(d, "heading_deg", m.heading_deg);
    m.switch_on_delay_s = rd.get_or<double>(d, "switch_on_delay_s", m.switch_on_delay_s);
    m.params.speed = rd.get_or<double>(d, "speed", m.params.speed);
    m.params.approach_distance = rd.get_or<double>(d, "approach_distance", m.params.approach_distance);
    m.params.scanner.noise_sigma = rd.get_or<double>(d, "noise_sigma", m.params.scanner.noise_sigma);
  }
  if (const auto p = doc["people"]) {
    rd.only_keys(p, {"mask_per_h", "no_mask_per_h"});
    s.people.mask_per_h = rd.get_or<double>(p, "mask_per_h", s.people.mask_per_h);
    s.people.no_mask_per_h = rd.get_or<double>(p, "no_mask_per_h", s.people.no_mask_per_h);
  }
  if (const auto sv = doc["supervisors"]) {
    rd.only_keys(sv, {"roster", "latency_s", "confirm_after_s", "session_ttl_s", "base_url"});
    auto& m = s.supervisors;
    if (sv["roster"]) {
      m.roster.clear();
      for (const auto& e : rd.sequence(sv, "roster")) {
        rd.only_keys(e, {"id", "address"});
        m.roster.push_back({rd.get<std::string>(e, "id"), rd.get_or<std::string>(e, "address", "")});
      }
    }
    if (sv["latency_s"]) {
      const auto l = rd.as<std::vector<double>>(sv["latency_s"], "latency_s");
      if (l.size() != 2) rd.fail(sv["latency_s"], "latency_s must be [min, max]");
      m.latency_min_s = l[0];
      m.latency_max_s = l[1];
    }
    m.confirm_after_s = rd.get_or<double>(sv, "confirm_after_s", m.confirm_after_s);
    m.session_ttl_s = rd.get_or<double>(sv, "session_ttl_s", m.session_ttl_s);
    m.base_url = rd.get_or<std::string>(sv, "base_url", m.base_url);
  }
  if (doc["configurations"]) {
    const auto rel = rd.get<std::string>(doc, "configurations");
    std::filesystem::path p(rel);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    std::string text;
    try {
      text = yaml::read_file(p.string());
    } catch (const Error& e) {
      rd.fail(doc["configurations"], e.what());
    }
    s.configurations = orchestrator::load_configurations_text(text, p.string());
  }
  s.patrol_config = rd.get_or<std::string>(doc, "patrol_config", s.patrol_config);
  s.charging_config = rd.get_or<std::string>(doc, "charging_config", s.charging_config);
  for (const auto& f : rd.sequence(doc, "faults")) s.faults.push_back(parse_fault(f, rd));

  const auto entities = s.entity_ids();
  const auto channels = s.channel_names();
  std::size_t i = 0;
  for (const auto& f : rd.sequence(doc, "faults")) {
    try {
      s.validate_fault(s.faults[i++], entities, channels);
    } catch (const Error& e) {
      rd.fail(f, e.what());
    }
  }
  try {
    s.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    rd.fail(doc, e.what());
  }
  std::stable_sort(s.faults.begin(), s.faults.end(), [](const FaultSpec& a, const FaultSpec& b) { return a.time < b.time; });
  return s;
}

inline Scenario load_scenario_text(const std::string& text, const std::string& source,
                                   const std::filesystem::path& base_dir = {}) {
  yaml::Reader rd(source);
  const auto doc = yaml::load(text, source);
  if (!doc.IsMap()) throw ParseError(source, 1, "scenario must be a mapping");
  return parse_scenario(doc, rd, base_dir);
}

inline Scenario load_scenario(const std::string& path) {
  return load_scenario_text(yaml::read_file(path), path, std::filesystem::path(path).parent_path());
}

}  // namespace sentinel::sim
