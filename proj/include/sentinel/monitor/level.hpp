#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "sentinel/core/error.hpp"

namespace sentinel::monitor {

/// Severity of one monitor. Ordered; aggregation always keeps the maximum.
/// Stale means the monitor itself stopped reporting.
enum class MonitorLevel : std::uint8_t { Ok = 0, Warn = 1, Error = 2, Stale = 3 };

constexpr std::string_view to_string(MonitorLevel level) {
  switch (level) {
    case MonitorLevel::Ok: return "OK";
    case MonitorLevel::Warn: return "WARN";
    case MonitorLevel::Error: return "ERROR";
    case MonitorLevel::Stale: return "STALE";
  }
  return "?";
}

inline std::optional<MonitorLevel> parse_level(std::string_view s) {
  if (s == "OK") return MonitorLevel::Ok;
  if (s == "WARN") return MonitorLevel::Warn;
  if (s == "ERROR") return MonitorLevel::Error;
  if (s == "STALE") return MonitorLevel::Stale;
  return std::nullopt;
}

constexpr MonitorLevel worst(MonitorLevel a, MonitorLevel b) { return a < b ? b : a; }

enum class BandDirection : std::uint8_t { HighIsBad, LowIsBad, BandIsGood };

constexpr std::string_view to_string(BandDirection d) {
  switch (d) {
    case BandDirection::HighIsBad: return "high-is-bad";
    case BandDirection::LowIsBad: return "low-is-bad";
    case BandDirection::BandIsGood: return "band-is-good";
  }
  return "?";
}

inline std::optional<BandDirection> parse_direction(std::string_view s) {
  if (s == "high-is-bad") return BandDirection::HighIsBad;
  if (s == "low-is-bad") return BandDirection::LowIsBad;
  if (s == "band-is-good") return BandDirection::BandIsGood;
  return std::nullopt;
}

/// Warning and error range of one monitored value. Only the bounds on the
/// bad side(s) of `direction` are consulted.
struct Band {
  BandDirection direction = BandDirection::HighIsBad;
  double warn_low = 0.0;
  double warn_high = 0.0;
  double error_low = 0.0;
  double error_high = 0.0;

  static Band high_is_bad(double warn, double error) {
    Band b{BandDirection::HighIsBad, 0.0, warn, 0.0, error};
    b.validate();
    return b;
  }
  static Band low_is_bad(double warn, double error) {
    Band b{BandDirection::LowIsBad, warn, 0.0, error, 0.0};
    b.validate();
    return b;
  }
  static Band band_is_good(double error_low, double warn_low, double warn_high,
                           double error_high) {
    Band b{BandDirection::BandIsGood, warn_low, warn_high, error_low, error_high};
    b.validate();
    return b;
  }
  /// Tolerance band around a nominal value, fractions of nominal.
  static Band around(double nominal, double warn_fraction, double error_fraction) {
    return band_is_good(nominal * (1.0 - error_fraction), nominal * (1.0 - warn_fraction),
                        nominal * (1.0 + warn_fraction), nominal * (1.0 + error_fraction));
  }

  void validate() const {
    const bool finite = std::isfinite(warn_low) && std::isfinite(warn_high) &&
                        std::isfinite(error_low) && std::isfinite(error_high);
    if (!finite) throw Error("band bounds must be finite");
    const bool high_ok = error_high > warn_high;
    const bool low_ok = error_low < warn_low;
    switch (direction) {
      case BandDirection::HighIsBad:
        if (!high_ok) throw Error("band: error bound must exceed warn bound");
        break;
      case BandDirection::LowIsBad:
        if (!low_ok) throw Error("band: error bound must be below warn bound");
        break;
      case BandDirection::BandIsGood:
        if (!high_ok || !low_ok || warn_low > warn_high)
          throw Error("band: need error_low < warn_low <= warn_high < error_high");
        break;
    }
  }

  bool operator==(const Band&) const = default;
};

struct Classification {
  MonitorLevel level;
  std::string message;
};

/// Closed good region: a value exactly on a bound takes the less severe level.
inline Classification classify_detailed(double value, const Band& band) {
  if (!std::isfinite(value)) return {MonitorLevel::Error, "non-finite sample"};
  const bool check_high = band.direction != BandDirection::LowIsBad;
  const bool check_low = band.direction != BandDirection::HighIsBad;
  if (check_high) {
    if (value > band.error_high) return {MonitorLevel::Error, "above error bound"};
    if (value > band.warn_high) return {MonitorLevel::Warn, "above warn bound"};
  }
  if (check_low) {
    if (value < band.error_low) return {MonitorLevel::Error, "below error bound"};
    if (value < band.warn_low) return {MonitorLevel::Warn, "below warn bound"};
  }
  return {MonitorLevel::Ok, ""};
}

inline MonitorLevel classify(double value, const Band& band) {
  return classify_detailed(value, band).level;
}

}  // namespace sentinel::monitor
