#include "visitscope/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace visitscope::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

bool better(const SpatialIndex::Hit& cand, const std::optional<SpatialIndex::Hit>& best,
            std::span<const PoiRecord> pois) {
  if (!best) return true;
  if (cand.distance_m != best->distance_m) return cand.distance_m < best->distance_m;
  return pois[cand.index].poi_id < pois[best->index].poi_id;
}

}  // namespace

double haversine(double lat1, double lon1, double lat2, double lon2) {
  const double p1 = lat1 * kDegToRad;
  const double p2 = lat2 * kDegToRad;
  const double dp = p2 - p1;
  const double dl = (lon2 - lon1) * kDegToRad;
  const double sp = std::sin(dp * 0.5);
  const double sl = std::sin(dl * 0.5);
  double h = sp * sp + std::cos(p1) * std::cos(p2) * sl * sl;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

std::optional<SpatialIndex::Hit> nearest_linear(std::span<const PoiRecord> pois, double lat, double lon,
                                                double radius_m) {
  std::optional<SpatialIndex::Hit> best;
  for (std::size_t i = 0; i < pois.size(); ++i) {
    const double d = haversine(lat, lon, pois[i].lat, pois[i].lon);
    if (d > radius_m) continue;
    const SpatialIndex::Hit h{i, d};
    if (better(h, best, pois)) best = h;
  }
  return best;
}

SpatialIndex::SpatialIndex(std::vector<PoiRecord> pois, double cell_m) : pois_(std::move(pois)) {
  double max_abs_lat = 0.0;
  for (const auto& p : pois_) max_abs_lat = std::max(max_abs_lat, std::abs(p.lat));
  cell_lat_ = std::max(cell_m, 1.0) / kEarthRadiusM * kRadToDeg;
  cell_lon_ = cell_lat_ / std::max(std::cos(max_abs_lat * kDegToRad), 1e-3);
  for (std::size_t i = 0; i < pois_.size(); ++i) {
    const auto row = static_cast<std::int64_t>(std::floor(pois_[i].lat / cell_lat_));
    const auto col = static_cast<std::int64_t>(std::floor(pois_[i].lon / cell_lon_));
    cells_[key(row, col)].push_back(i);
  }
}

std::optional<SpatialIndex::Hit> SpatialIndex::linear_scan(double lat, double lon, double radius_m) const {
  return nearest_linear(pois_, lat, lon, radius_m);
}

std::optional<SpatialIndex::Hit> SpatialIndex::nearest(double lat, double lon, double radius_m) const {
  if (pois_.empty() || radius_m < 0.0) return std::nullopt;

  // Any point within radius_m differs by at most r/R radians of latitude.
  // For longitude, hav(d) >= cos(p1) cos(p2) hav(dl) bounds the spread.
  const double ang = radius_m / kEarthRadiusM;
  const double slack = 1.0 + 1e-9;
  const double dlat = ang * kRadToDeg * slack + 1e-12;

  double max_abs_lat = std::abs(lat) + dlat;
  if (max_abs_lat >= 90.0) return linear_scan(lat, lon, radius_m);
  const double c = std::cos(max_abs_lat * kDegToRad);
  const double s = std::sin(ang * 0.5) / c;
  if (s >= 1.0) return linear_scan(lat, lon, radius_m);
  const double dlon = 2.0 * std::asin(s) * kRadToDeg * slack + 1e-12;
  if (lon - dlon < -180.0 || lon + dlon > 180.0) return linear_scan(lat, lon, radius_m);

  const auto r0 = static_cast<std::int64_t>(std::floor((lat - dlat) / cell_lat_));
  const auto r1 = static_cast<std::int64_t>(std::floor((lat + dlat) / cell_lat_));
  const auto c0 = static_cast<std::int64_t>(std::floor((lon - dlon) / cell_lon_));
  const auto c1 = static_cast<std::int64_t>(std::floor((lon + dlon) / cell_lon_));
  if ((r1 - r0 + 1) * (c1 - c0 + 1) > static_cast<std::int64_t>(cells_.size()) * 4)
    return linear_scan(lat, lon, radius_m);

  std::optional<Hit> best;
  for (auto r = r0; r <= r1; ++r) {
    for (auto cc = c0; cc <= c1; ++cc) {
      const auto it = cells_.find(key(r, cc));
      if (it == cells_.end()) continue;
      for (std::size_t i : it->second) {
        const double d = haversine(lat, lon, pois_[i].lat, pois_[i].lon);
        if (d > radius_m) continue;
        const Hit h{i, d};
        if (better(h, best, pois_)) best = h;
      }
    }
  }
  return best;
}

}  // namespace visitscope::geo
