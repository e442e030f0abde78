#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "sentinel/bt/builder.hpp"
#include "sentinel/core/yaml_doc.hpp"

namespace sentinel::bt {

/// Arbiter section of a configuration document:
///
///   arbiter:
///     tick_period_s: 1
///     storm: {window_s: 180, threshold: 10}
///     classes:                      # order = priority
///       - name: localization_lost
///         monitors: [localization]  # "prefix*" matches declared ids
///         trigger: ERROR
///         recoveries:
///           - {action: rotate_slow, duration_s: 20, angular_rate: 0.3, budget: 2, cooldown_s: 10}
///           - {action: request_supervisor}
inline TreeDefinition parse_tree(const YAML::Node& node, const yaml::Reader& rd,
                                 const std::vector<std::string>& declared_ids = {}) {
  rd.only_keys(node, {"tick_period_s", "storm", "classes"});
  TreeDefinition def;
  def.tick_period = from_seconds(rd.get_or<double>(node, "tick_period_s", 1.0));
  if (node["storm"]) {
    const auto s = node["storm"];
    rd.only_keys(s, {"window_s", "threshold"});
    def.storm.window = from_seconds(rd.get_or<double>(s, "window_s", 180.0));
    def.storm.threshold = rd.get_or<std::size_t>(s, "threshold", 10);
  }
  for (const auto& c : rd.sequence(node, "classes", true)) {
    rd.only_keys(c, {"name", "monitors", "trigger", "recoveries"});
    ErrorClassSpec cls;
    cls.name = rd.get<std::string>(c, "name");
    for (const auto& m : rd.sequence(c, "monitors", true)) {
      const auto id = rd.as<std::string>(m, "monitors");
      if (!id.empty() && id.back() == '*') {
        const auto prefix = id.substr(0, id.size() - 1);
        bool any = false;
        for (const auto& d : declared_ids)
          if (d.starts_with(prefix)) {
            cls.monitors.push_back(d);
            any = true;
          }
        if (!any) rd.fail(m, "pattern '" + id + "' matches no declared monitor");
      } else {
        if (!declared_ids.empty() && std::find(declared_ids.begin(), declared_ids.end(), id) == declared_ids.end())
          rd.fail(m, "undeclared monitor '" + id + "'");
        cls.monitors.push_back(id);
      }
    }
    const auto trig = rd.get_or<std::string>(c, "trigger", "ERROR");
    auto level = monitor::parse_level(trig);
    if (!level || *level == MonitorLevel::Ok) rd.fail(c["trigger"], "bad trigger level '" + trig + "'");
    cls.trigger = *level;
    auto recs = rd.sequence(c, "recoveries", true);
    if (recs.size() == 0) rd.fail(recs, "error class '" + cls.name + "' has an empty recovery chain");
    for (const auto& r : recs) {
      rd.only_keys(r, {"action", "duration_s", "distance_m", "angular_rate", "target_config",
                       "budget", "cooldown_s"});
      const auto name = rd.get<std::string>(r, "action");
      auto id = parse_recovery(name);
      if (!id) rd.fail(r["action"], "unknown recovery '" + name + "'");
      RecoveryAction a = make_action(*id);
      a.params.duration_s = rd.get_or<double>(r, "duration_s", a.params.duration_s);
      a.params.distance_m = rd.get_or<double>(r, "distance_m", a.params.distance_m);
      a.params.angular_rate = rd.get_or<double>(r, "angular_rate", a.params.angular_rate);
      a.params.target_config = rd.get_or<std::string>(r, "target_config", a.params.target_config);
      a.budget = rd.get_or<int>(r, "budget", a.budget);
      a.cooldown_s = rd.get_or<double>(r, "cooldown_s", a.cooldown_s);
      try {
        a.validate();
      } catch (const Error& e) {
        rd.fail(r, e.what());
      }
      cls.chain.push_back(std::move(a));
    }
    def.classes.push_back(std::move(cls));
  }
  return def;
}

inline void emit_tree(YAML::Emitter& out, const TreeDefinition& def) {
  out << YAML::BeginMap;
  out << YAML::Key << "tick_period_s" << YAML::Value << to_seconds(def.tick_period);
  out << YAML::Key << "storm" << YAML::Value << YAML::Flow << YAML::BeginMap
      << YAML::Key << "window_s" << YAML::Value << to_seconds(def.storm.window)
      << YAML::Key << "threshold" << YAML::Value << def.storm.threshold << YAML::EndMap;
  out << YAML::Key << "classes" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : def.classes) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << c.name;
    out << YAML::Key << "monitors" << YAML::Value << YAML::Flow << c.monitors;
    out << YAML::Key << "trigger" << YAML::Value << std::string(monitor::to_string(c.trigger));
    out << YAML::Key << "recoveries" << YAML::Value << YAML::BeginSeq;
    for (const auto& a : c.chain) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "action" << YAML::Value << std::string(to_string(a.id));
      if (a.params.duration_s != 0) out << YAML::Key << "duration_s" << YAML::Value << a.params.duration_s;
      if (a.params.distance_m != 0) out << YAML::Key << "distance_m" << YAML::Value << a.params.distance_m;
      if (a.params.angular_rate != 0) out << YAML::Key << "angular_rate" << YAML::Value << a.params.angular_rate;
      if (!a.params.target_config.empty())
        out << YAML::Key << "target_config" << YAML::Value << a.params.target_config;
      out << YAML::Key << "budget" << YAML::Value << a.budget;
      out << YAML::Key << "cooldown_s" << YAML::Value << a.cooldown_s;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
}

inline TreeDefinition load_tree_text(const std::string& text, const std::string& source,
                                     const std::vector<std::string>& declared_ids = {}) {
  yaml::Reader rd(source);
  auto doc = yaml::load(text, source);
  if (doc["arbiter"]) return parse_tree(doc["arbiter"], rd, declared_ids);
  return parse_tree(doc, rd, declared_ids);
}

inline std::string dump_tree(const TreeDefinition& def) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  emit_tree(out, def);
  return std::string(out.c_str()) + "\n";
}

}  // namespace sentinel::bt
