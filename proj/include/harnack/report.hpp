#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

namespace harnack {

using json = nlohmann::ordered_json;

enum class Bound { AtLeast, AtMost };

/// One checked quantity. `pass` is derived, never set by hand.
struct HarnackRecord {
  std::string check;
  double time = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> location;
  double value = 0.0;
  double threshold = 0.0;
  Bound bound = Bound::AtLeast;

  bool pass() const {
    if (!std::isfinite(value)) return false;
    return bound == Bound::AtLeast ? value >= threshold : value <= threshold;
  }
};

/// Per-grid-point value kept in memory for cross-checks; not serialized.
struct PointValue {
  double t = 0.0;
  int i = 0, j = 0;
  double value = 0.0;
};

struct HarnackReport {
  std::string campaign;
  json config = json::object();
  std::vector<HarnackRecord> records;
  std::vector<PointValue> points;
  std::size_t untestable_points = 0;
  /// Fraction of tested points whose value meets the tolerance.
  double fraction_within_tol = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> artifacts;
  std::vector<std::string> warnings;
  double wall_clock_s = 0.0;
  std::string timestamp;

  void add(HarnackRecord r) { records.push_back(std::move(r)); }

  bool pass() const {
    for (const auto& r : records)
      if (!r.pass()) return false;
    return true;
  }

  /// Record with the smallest value (for AtLeast records), or nullptr.
  const HarnackRecord* worst() const {
    const HarnackRecord* w = nullptr;
    for (const auto& r : records)
      if (!w || r.value < w->value) w = &r;
    return w;
  }
};

namespace detail {
inline json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}
}  // namespace detail

inline json to_json(const HarnackRecord& r) {
  json j;
  j["check"] = r.check;
  j["time"] = detail::number(r.time);
  json loc = json::array();
  for (double x : r.location) loc.push_back(detail::number(x));
  j["location"] = loc;
  j["value"] = detail::number(r.value);
  j["threshold"] = detail::number(r.threshold);
  j["bound"] = r.bound == Bound::AtLeast ? ">=" : "<=";
  j["pass"] = r.pass();
  return j;
}

/// Serialized report. Only "timestamp" and "wall_clock_s" vary between runs
/// with identical configuration.
inline json to_json(const HarnackReport& rep) {
  json j;
  j["campaign"] = rep.campaign;
  j["config"] = rep.config;
  j["pass"] = rep.pass();
  json recs = json::array();
  for (const auto& r : rep.records) recs.push_back(to_json(r));
  j["records"] = recs;
  j["untestable_points"] = rep.untestable_points;
  j["fraction_within_tol"] = detail::number(rep.fraction_within_tol);
  j["warnings"] = rep.warnings;
  j["artifacts"] = rep.artifacts;
  j["timestamp"] = rep.timestamp;
  j["wall_clock_s"] = rep.wall_clock_s;
  return j;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace harnack
