#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "visitscope/geo.hpp"
#include "visitscope/matrix.hpp"
#include "visitscope/types.hpp"

namespace visitscope::visits {

struct StayPointParams {
  double dist_thresh_m = 200.0;
  double time_thresh_s = 600.0;
};

/// Scan-forward stay-point detection: from an anchor record, extend over the
/// following records while each stays within `dist_thresh_m` of the anchor;
/// a run spanning at least `time_thresh_s` becomes a visit and scanning
/// resumes after it, otherwise the anchor advances by one.
std::vector<Visit> extract_stay_points(const MobilityTrace& trace, const StayPointParams& params);

/// Nearest PoI within `radius_m`, or none.
std::optional<PoiId> snap_to_poi(const Visit& visit, const geo::SpatialIndex& index, double radius_m);

/// Snaps every visit in place; returns how many found a PoI.
std::size_t snap_all(std::span<Visit> visits, const geo::SpatialIndex& index, double radius_m);

struct AggregateStats {
  std::size_t snapped = 0;
  std::size_t unsnapped = 0;
};

/// One row per (user, PoI), sorted by (user, PoI). Unsnapped visits are
/// excluded and counted.
std::vector<VisitFeature> aggregate_features(std::span<const Visit> visits, AggregateStats* stats = nullptr);

enum class Transform { None, Log1p };

const char* to_string(Transform t);
Transform transform_from_string(const std::string& s);

struct FeatureRowRef {
  UserId user_id;
  PoiId poi_id;
};

struct FeatureMatrix {
  Matrix values;  // n x 2: n_days, mean dwell in hours (transformed)
  std::vector<FeatureRowRef> index;
  Transform transform = Transform::None;
};

FeatureMatrix feature_matrix(std::span<const VisitFeature> features, Transform transform);

double apply_transform(double v, Transform t);
double invert_transform(double v, Transform t);

void write_visits_csv(std::ostream& out, std::span<const Visit> visits);
std::vector<Visit> read_visits_csv(std::istream& in);
void write_features_csv(std::ostream& out, std::span<const VisitFeature> features);
std::vector<VisitFeature> read_features_csv(std::istream& in);

}  // namespace visitscope::visits
