#pragma once

#include <string>
#include <vector>

#include "sentinel/bt/tree_io.hpp"
#include "sentinel/core/yaml_doc.hpp"
#include "sentinel/orchestrator/configuration.hpp"

namespace sentinel::orchestrator {

/// Band as written in documents: `{direction: high-is-bad, warn: 80, error: 95}`,
/// low-is-bad likewise, band-is-good with explicit warn_low/warn_high/error_low/error_high.
inline monitor::Band parse_band(const YAML::Node& n, const yaml::Reader& rd) {
  rd.only_keys(n, {"direction", "warn", "error", "warn_low", "warn_high", "error_low", "error_high"});
  const auto dir_name = rd.get<std::string>(n, "direction");
  auto dir = monitor::parse_direction(dir_name);
  if (!dir) rd.fail(n["direction"], "unknown band direction '" + dir_name + "'");
  try {
    switch (*dir) {
      case monitor::BandDirection::HighIsBad:
        return monitor::Band::high_is_bad(rd.get<double>(n, "warn"), rd.get<double>(n, "error"));
      case monitor::BandDirection::LowIsBad:
        return monitor::Band::low_is_bad(rd.get<double>(n, "warn"), rd.get<double>(n, "error"));
      case monitor::BandDirection::BandIsGood:
        return monitor::Band::band_is_good(rd.get<double>(n, "error_low"), rd.get<double>(n, "warn_low"),
                                           rd.get<double>(n, "warn_high"), rd.get<double>(n, "error_high"));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    rd.fail(n, e.what());
  }
  rd.fail(n, "bad band");
}

inline void emit_band(YAML::Emitter& out, const monitor::Band& b) {
  out << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "direction" << YAML::Value << std::string(monitor::to_string(b.direction));
  switch (b.direction) {
    case monitor::BandDirection::HighIsBad:
      out << YAML::Key << "warn" << YAML::Value << b.warn_high << YAML::Key << "error" << YAML::Value << b.error_high;
      break;
    case monitor::BandDirection::LowIsBad:
      out << YAML::Key << "warn" << YAML::Value << b.warn_low << YAML::Key << "error" << YAML::Value << b.error_low;
      break;
    case monitor::BandDirection::BandIsGood:
      out << YAML::Key << "error_low" << YAML::Value << b.error_low << YAML::Key << "warn_low" << YAML::Value
          << b.warn_low << YAML::Key << "warn_high" << YAML::Value << b.warn_high << YAML::Key << "error_high"
          << YAML::Value << b.error_high;
      break;
  }
  out << YAML::EndMap;
}

inline Configuration parse_configuration(const YAML::Node& doc, const yaml::Reader& rd) {
  rd.only_keys(doc, {"name", "entities", "monitors", "arbiter", "hooks"});
  Configuration cfg;
  cfg.name = rd.get<std::string>(doc, "name");
  for (const auto& e : rd.sequence(doc, "entities")) {
    rd.only_keys(e, {"id", "command", "heartbeat", "outputs", "startup_grace_s", "clean_state"});
    EntitySpec spec;
    spec.id = rd.get<std::string>(e, "id");
    spec.command = rd.get_or<std::vector<std::string>>(e, "command", {});
    spec.heartbeat_channel = rd.get_or<std::string>(e, "heartbeat", "/" + spec.id + "/heartbeat");
    spec.startup_grace_s = rd.get_or<double>(e, "startup_grace_s", 5.0);
    spec.clean_state = rd.get_or<bool>(e, "clean_state", true);
    for (const auto& o : rd.sequence(e, "outputs")) {
      rd.only_keys(o, {"channel", "rate_hz", "warn_fraction", "error_fraction"});
      ChannelSpec ch;
      ch.name = rd.get<std::string>(o, "channel");
      ch.rate_hz = rd.get<double>(o, "rate_hz");
      ch.warn_fraction = rd.get_or<double>(o, "warn_fraction", ch.warn_fraction);
      ch.error_fraction = rd.get_or<double>(o, "error_fraction", ch.error_fraction);
      spec.outputs.push_back(std::move(ch));
    }
    try {
      spec.validate();
    } catch (const Error& err) {
      rd.fail(e, err.what());
    }
    cfg.entities.push_back(std::move(spec));
  }
  for (const auto& m : rd.sequence(doc, "monitors")) {
    rd.only_keys(m, {"id", "kind", "entity", "band", "period_s", "unit"});
    monitor::MonitorSpec spec;
    spec.id = rd.get<std::string>(m, "id");
    const auto kind = rd.get<std::string>(m, "kind");
    auto k = monitor::parse_kind(kind);
    if (!k) rd.fail(m["kind"], "unknown monitor kind '" + kind + "'");
    spec.kind = *k;
    spec.entity_id = rd.get_or<std::string>(m, "entity", "host");
    spec.band = parse_band(rd.require(m, "band"), rd);
    spec.period = from_seconds(rd.get_or<double>(m, "period_s", to_seconds(monitor::default_period(*k))));
    const auto unit = rd.get_or<std::string>(m, "unit", "");
    auto u = monitor::parse_unit(unit);
    if (!u) rd.fail(m["unit"], "unknown unit '" + unit + "'");
    spec.unit = *u;
    cfg.monitors.push_back(std::move(spec));
  }
  if (doc["hooks"]) {
    rd.only_keys(doc["hooks"], {"entry", "exit"});
    cfg.entry_hooks = rd.get_or<std::vector<std::string>>(doc["hooks"], "entry", {});
    cfg.exit_hooks = rd.get_or<std::vector<std::string>>(doc["hooks"], "exit", {});
  }
  if (doc["arbiter"]) {
    std::vector<std::string> ids;
    for (const auto& m : cfg.declared_monitors()) ids.push_back(m.id);
    cfg.tree = bt::parse_tree(doc["arbiter"], rd, ids);
  }
  try {
    cfg.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    rd.fail(doc, e.what());
  }
  return cfg;
}

/// One YAML document per configuration; the first one is the initial one.
inline std::vector<Configuration> load_configurations_text(const std::string& text, const std::string& source) {
  yaml::Reader rd(source);
  std::vector<Configuration> out;
  for (const auto& doc : yaml::load_all(text, source)) {
    if (doc.IsNull()) continue;
    out.push_back(parse_configuration(doc, rd));
  }
  if (out.empty()) throw ParseError(source, 0, "no configuration documents");
  return out;
}

inline std::vector<Configuration> load_configurations(const std::string& path) {
  return load_configurations_text(yaml::read_file(path), path);
}

inline void emit_configuration(YAML::Emitter& out, const Configuration& c) {
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.name;
  out << YAML::Key << "entities" << YAML::Value << YAML::BeginSeq;
  for (const auto& e : c.entities) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << e.id;
    out << YAML::Key << "command" << YAML::Value << YAML::Flow << e.command;
    out << YAML::Key << "heartbeat" << YAML::Value << e.heartbeat_channel;
    out << YAML::Key << "startup_grace_s" << YAML::Value << e.startup_grace_s;
    out << YAML::Key << "clean_state" << YAML::Value << e.clean_state;
    out << YAML::Key << "outputs" << YAML::Value << YAML::BeginSeq;
    for (const auto& o : e.outputs)
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "channel" << YAML::Value << o.name << YAML::Key
          << "rate_hz" << YAML::Value << o.rate_hz << YAML::Key << "warn_fraction" << YAML::Value
          << o.warn_fraction << YAML::Key << "error_fraction" << YAML::Value << o.error_fraction
          << YAML::EndMap;
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "monitors" << YAML::Value << YAML::BeginSeq;
  for (const auto& m : c.monitors) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << m.id;
    out << YAML::Key << "kind" << YAML::Value << std::string(monitor::to_string(m.kind));
    out << YAML::Key << "entity" << YAML::Value << m.entity_id;
    out << YAML::Key << "band" << YAML::Value;
    emit_band(out, m.band);
    out << YAML::Key << "period_s" << YAML::Value << to_seconds(m.period);
    out << YAML::Key << "unit" << YAML::Value << std::string(monitor::to_string(m.unit));
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "hooks" << YAML::Value << YAML::BeginMap << YAML::Key << "entry" << YAML::Value
      << YAML::Flow << c.entry_hooks << YAML::Key << "exit" << YAML::Value << YAML::Flow << c.exit_hooks
      << YAML::EndMap;
  if (!c.tree.classes.empty()) {
    out << YAML::Key << "arbiter" << YAML::Value;
    bt::emit_tree(out, c.tree);
  }
  out << YAML::EndMap;
}

inline std::string dump_configurations(const std::vector<Configuration>& configs) {
  std::string text;
  for (const auto& c : configs) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    emit_configuration(out, c);
    text += "---\n";
    text += out.c_str();
    text += "\n";
  }
  return text;
}

}  // namespace sentinel::orchestrator
