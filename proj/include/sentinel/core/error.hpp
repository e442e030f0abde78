#pragma once

#include <stdexcept>
#include <string>

namespace sentinel {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised while reading a declarative document. `line` is 1-based, 0 if unknown.
class ParseError : public Error {
 public:
  ParseError(std::string source, int line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  int line() const { return line_; }

 private:
  std::string source_;
  int line_;
};

/// A report, condition, or command referenced an id the active configuration
/// does not declare.
class ConfigurationDrift : public Error {
 public:
  using Error::Error;
};

}  // namespace sentinel
