#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "sentinel/core/error.hpp"

namespace sentinel::yaml {

/// Read helpers that turn every failure into a ParseError carrying the
/// document name and the 1-based line of the offending node.
class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  const std::string& source() const { return source_; }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    const int line = at.IsDefined() && at.Mark().line >= 0 ? at.Mark().line + 1 : 0;
    throw ParseError(source_, line, what);
  }

  YAML::Node require(const YAML::Node& map, const std::string& key) const {
    if (!map.IsMap()) fail(map, "expected a mapping");
    YAML::Node n = map[key];
    if (!n.IsDefined() || n.IsNull()) fail(map, "missing key '" + key + "'");
    return n;
  }

  template <typename T>
  T get(const YAML::Node& map, const std::string& key) const {
    return as<T>(require(map, key), key);
  }

  template <typename T>
  T get_or(const YAML::Node& map, const std::string& key, T fallback) const {
    if (!map.IsMap()) fail(map, "expected a mapping");
    YAML::Node n = map[key];
    if (!n.IsDefined() || n.IsNull()) return fallback;
    return as<T>(n, key);
  }

  template <typename T>
  T as(const YAML::Node& n, const std::string& what) const {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "bad value for '" + what + "'");
    }
  }

  YAML::Node sequence(const YAML::Node& map, const std::string& key, bool required = false) const {
    if (!map.IsMap()) fail(map, "expected a mapping");
    YAML::Node n = map[key];
    if (!n.IsDefined() || n.IsNull()) {
      if (required) fail(map, "missing key '" + key + "'");
      return YAML::Node(YAML::NodeType::Sequence);
    }
    if (!n.IsSequence()) fail(n, "'" + key + "' must be a list");
    return n;
  }

  /// Unknown keys are configuration typos; reject them.
  void only_keys(const YAML::Node& map, std::initializer_list<const char*> allowed) const {
    if (!map.IsMap()) fail(map, "expected a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) fail(kv.first, "unknown key '" + key + "'");
    }
  }

 private:
  std::string source_;
};

inline std::vector<YAML::Node> load_all(const std::string& text, const std::string& source) {
  try {
    return YAML::LoadAll(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(source, e.mark.line + 1, e.msg);
  }
}

inline YAML::Node load(const std::string& text, const std::string& source) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(source, e.mark.line + 1, e.msg);
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sentinel::yaml
