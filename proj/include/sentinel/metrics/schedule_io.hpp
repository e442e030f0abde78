#pragma once

#include <cstdio>
#include <string>

#include "sentinel/core/yaml_doc.hpp"
#include "sentinel/metrics/schedule.hpp"

namespace sentinel::metrics {

inline int parse_weekday(const YAML::Node& n, const yaml::Reader& rd) {
  const auto s = rd.as<std::string>(n, "weekday");
  for (std::size_t i = 0; i < kWeekdayNames.size(); ++i)
    if (s == kWeekdayNames[i]) return static_cast<int>(i);
  rd.fail(n, "unknown weekday '" + s + "' (use mon..sun)");
}

/// "HH:MM" or "HH:MM:SS" -> seconds after midnight; "24:00" allowed.
inline double parse_clock_time(const YAML::Node& n, const yaml::Reader& rd) {
  const auto s = rd.as<std::string>(n, "time");
  int h = 0, m = 0, sec = 0;
  char c1 = 0, c2 = 0;
  const int got = std::sscanf(s.c_str(), "%d%c%d%c%d", &h, &c1, &m, &c2, &sec);
  if (got < 3 || c1 != ':' || (got == 5 && c2 != ':') || got == 4 || m < 0 || m > 59 || sec < 0 ||
      sec > 59 || h < 0 || h > 24 || (h == 24 && (m || sec)))
    rd.fail(n, "bad time of day '" + s + "' (expected HH:MM)");
  return h * 3600.0 + m * 60.0 + sec;
}

/// ```
/// epoch_weekday: mon        # weekday of day 0
/// windows:
///   - days: [mon, tue, wed, thu, fri]
///     start: "09:00"
///     end: "17:00"
/// ```
inline DutySchedule parse_schedule(const YAML::Node& n, const yaml::Reader& rd) {
  rd.only_keys(n, {"epoch_weekday", "windows"});
  DutySchedule s;
  if (n["epoch_weekday"]) s.epoch_weekday = parse_weekday(n["epoch_weekday"], rd);
  for (const auto& w : rd.sequence(n, "windows", true)) {
    rd.only_keys(w, {"days", "start", "end"});
    DutyWindow win;
    for (const auto& d : rd.sequence(w, "days", true)) win.days[static_cast<std::size_t>(parse_weekday(d, rd))] = true;
    win.start_s = parse_clock_time(rd.require(w, "start"), rd);
    win.end_s = parse_clock_time(rd.require(w, "end"), rd);
    s.windows.push_back(win);
  }
  try {
    s.validate();
  } catch (const Error& e) {
    rd.fail(n, e.what());
  }
  return s;
}

inline DutySchedule load_schedule_text(const std::string& text, const std::string& source) {
  yaml::Reader rd(source);
  return parse_schedule(yaml::load(text, source), rd);
}

inline DutySchedule load_schedule(const std::string& path) {
  return load_schedule_text(yaml::read_file(path), path);
}

inline void emit_schedule(YAML::Emitter& out, const DutySchedule& s) {
  auto hhmm = [](double secs) {
    char buf[16];
    const int t = static_cast<int>(secs);
    if (t % 60)
      std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", t / 3600, t / 60 % 60, t % 60);
    else
      std::snprintf(buf, sizeof buf, "%02d:%02d", t / 3600, t / 60 % 60);
    return std::string(buf);
  };
  out << YAML::BeginMap;
  out << YAML::Key << "epoch_weekday" << YAML::Value << kWeekdayNames[static_cast<std::size_t>(s.epoch_weekday)];
  out << YAML::Key << "windows" << YAML::Value << YAML::BeginSeq;
  for (const auto& w : s.windows) {
    out << YAML::BeginMap << YAML::Key << "days" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (std::size_t d = 0; d < 7; ++d)
      if (w.days[d]) out << kWeekdayNames[d];
    out << YAML::EndSeq;
    out << YAML::Key << "start" << YAML::Value << YAML::DoubleQuoted << hhmm(w.start_s);
    out << YAML::Key << "end" << YAML::Value << YAML::DoubleQuoted << hhmm(w.end_s);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
}

}  // namespace sentinel::metrics
