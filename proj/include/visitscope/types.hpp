#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "visitscope/time.hpp"

namespace visitscope {

using UserId = std::string;
using PoiId = std::string;

struct MobilityRecord {
  UserId user_id;
  double lat = 0.0;
  double lon = 0.0;
  Timestamp t = 0;

  friend bool operator==(const MobilityRecord&, const MobilityRecord&) = default;
};

/// Chronologically ordered records of one user; timestamps are unique after
/// `build_traces`.
struct MobilityTrace {
  UserId user_id;
  std::vector<MobilityRecord> records;

  friend bool operator==(const MobilityTrace&, const MobilityTrace&) = default;
};

using TraceMap = std::map<UserId, MobilityTrace>;

struct PoiRecord {
  PoiId poi_id;
  double lat = 0.0;
  double lon = 0.0;
  std::string category;

  friend bool operator==(const PoiRecord&, const PoiRecord&) = default;
};

struct Visit {
  UserId user_id;
  double lat = 0.0;  // centroid
  double lon = 0.0;
  std::optional<PoiId> poi_id;
  Timestamp arrival = 0;
  Timestamp departure = 0;

  std::int64_t dwell_s() const { return departure - arrival; }

  friend bool operator==(const Visit&, const Visit&) = default;
};

struct VisitFeature {
  UserId user_id;
  PoiId poi_id;
  std::int64_t n_days = 0;
  double mean_dwell_s = 0.0;
  double total_dwell_s = 0.0;
  std::int64_t n_visits = 0;

  friend bool operator==(const VisitFeature&, const VisitFeature&) = default;
};

inline bool valid_coordinate(double lat, double lon) {
  return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
}

}  // namespace visitscope
