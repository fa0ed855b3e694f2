#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "visitscope/types.hpp"

namespace visitscope::geo {

inline constexpr double kEarthRadiusM = 6'371'000.0;

/// Great-circle distance in meters (haversine, spherical Earth).
double haversine(double lat1, double lon1, double lat2, double lon2);

/// Uniform lat/lon grid over a fixed PoI set. Immutable after construction;
/// safe to share between threads.
class SpatialIndex {
 public:
  /// `cell_m` is the nominal cell edge in meters (the snap radius by default).
  SpatialIndex(std::vector<PoiRecord> pois, double cell_m);

  struct Hit {
    std::size_t index;
    double distance_m;
  };

  /// Nearest PoI within `radius_m`; equal distances go to the smaller poi_id.
  std::optional<Hit> nearest(double lat, double lon, double radius_m) const;

  const std::vector<PoiRecord>& pois() const { return pois_; }
  const PoiRecord& poi(std::size_t i) const { return pois_[i]; }
  std::size_t cell_count() const { return cells_.size(); }
  double cell_lat_deg() const { return cell_lat_; }
  double cell_lon_deg() const { return cell_lon_; }

 private:
  std::optional<Hit> linear_scan(double lat, double lon, double radius_m) const;
  static std::int64_t key(std::int64_t row, std::int64_t col) { return (row << 32) ^ (col & 0xffffffff); }

  std::vector<PoiRecord> pois_;
  double cell_lat_ = 1.0;
  double cell_lon_ = 1.0;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

/// Exact nearest-within-radius by scanning every PoI. Used where no index
/// exists and as a reference for the grid.
std::optional<SpatialIndex::Hit> nearest_linear(std::span<const PoiRecord> pois, double lat, double lon,
                                                double radius_m);

}  // namespace visitscope::geo
