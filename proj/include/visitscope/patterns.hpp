#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "visitscope/classify.hpp"
#include "visitscope/types.hpp"

namespace visitscope::patterns {

using classify::kLabelCount;
using classify::Label;

struct LabeledVisit {
  Visit visit;
  Label label = Label::G1;
};

/// Attaches each snapped visit to the label of its (user, PoI) feature.
/// Visits without a labeled feature are dropped.
std::vector<LabeledVisit> label_visits(std::span<const Visit> visits,
                                       std::span<const classify::LabeledFeature> labeled);

/// Labels of one user's visits ordered by arrival.
std::vector<Label> visit_sequence(std::span<const LabeledVisit> user_visits);

using Square = std::array<std::array<double, kLabelCount>, kLabelCount>;

struct TransitionMatrix {
  UserId user_id;
  std::array<std::array<std::int64_t, kLabelCount>, kLabelCount> counts{};
  Square probs{};  // row-normalized; rows with no outgoing transitions stay zero

  std::int64_t total() const;
  bool is_zero() const { return total() == 0; }
};

TransitionMatrix transition_matrix(const UserId& user, std::span<const Label> sequence);

/// One matrix per user (sorted by user id).
std::vector<TransitionMatrix> transition_matrices(std::span<const LabeledVisit> visits);

struct MotifClusterResult {
  std::vector<UserId> users;         // users that entered clustering
  std::vector<std::size_t> cluster;  // parallel to users
  std::vector<Square> centroids;
  double inertia = 0.0;
};

/// k-means over the flattened 49-value probability matrices of users with at
/// least one transition. Throws std::invalid_argument when fewer than k_m
/// such users exist.
MotifClusterResult cluster_motifs(std::span<const TransitionMatrix> matrices, std::size_t k_m, std::uint64_t seed,
                                  unsigned restarts = 10);

struct CategoryShare {
  std::string category;
  double share = 0.0;
  std::size_t count = 0;
};

struct SemanticProfile {
  std::array<std::vector<CategoryShare>, kLabelCount> top;  // descending share, ties by name
  std::array<std::size_t, kLabelCount> visits{};
};

/// `category_of` maps PoI id to its category.
SemanticProfile semantic_top_k(std::span<const LabeledVisit> visits,
                               const std::unordered_map<PoiId, std::string>& category_of, std::size_t k);

inline constexpr std::size_t kWeekCells = 7 * 24;

struct TemporalProfile {
  std::array<std::array<double, kWeekCells>, kLabelCount> intensity{};  // index dow * 24 + hour
  std::array<std::size_t, kLabelCount> users{};  // users contributing to each label
  double weeks = 1.0;
  std::string mode = "per_user_label_share,uniform_user_mean,per_week";
};

/// Visit arrivals binned by (weekday, hour). For each label, each user's
/// histogram is divided by that user's visit count for the label, users are
/// averaged with equal weight, and the result is divided by `weeks`.
TemporalProfile temporal_profile(std::span<const LabeledVisit> visits, double weeks);

struct Aoi {
  double lat_min = 0, lat_max = 0, lon_min = 0, lon_max = 0;
};

struct SpatialGrid {
  Aoi aoi;
  double cell_deg = 0.005;
  std::array<std::map<std::pair<std::int64_t, std::int64_t>, std::size_t>, kLabelCount> counts;
  std::size_t outside = 0;
};

/// Cell index of `v` on an axis starting at `origin`. Points exactly on an
/// interior cell edge go to the lower cell.
std::int64_t cell_index(double v, double origin, double cell);

/// AOI defaults to the bounding box of the visit centroids.
SpatialGrid spatial_grid(std::span<const LabeledVisit> visits, double cell_deg, std::optional<Aoi> aoi = {});

void write_transitions_csv(std::ostream& out, std::span<const TransitionMatrix> matrices);
nlohmann::json motifs_json(const MotifClusterResult& motifs);
void write_semantic_csv(std::ostream& out, const SemanticProfile& profile);
void write_temporal_csv(std::ostream& out, const TemporalProfile& profile);
void write_spatial_csv(std::ostream& out, const SpatialGrid& grid);
nlohmann::json spatial_meta_json(const SpatialGrid& grid);

}  // namespace visitscope::patterns
