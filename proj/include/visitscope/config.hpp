#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visitscope/classify.hpp"
#include "visitscope/gmm.hpp"
#include "visitscope/ingest.hpp"
#include "visitscope/patterns.hpp"
#include "visitscope/quality.hpp"
#include "visitscope/visits.hpp"

namespace visitscope {

/// Invalid configuration. `field` is a JSON-pointer style path such as
/// "/quality/tau_h".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct IngestConfig {
  std::string format = "csv";  // "csv" | "plt"
  std::vector<std::filesystem::path> trajectories;
  ingest::TrajectoryColumns columns;
  std::filesystem::path pois;
  ingest::PoiColumns poi_columns;
};

struct QualityConfig {
  double tau_h = 1.0;
  int T_d = 15;
  double P_h = 24.0;
  double max_speed_kmh = 150.0;
  quality::CohortCriteria cohort;
  std::vector<double> tau_grid{1.0, 4.0, 6.0};
  std::vector<int> T_grid{7, 15, 30};
  quality::WindowAnchor anchor;

  quality::CompletenessParams params() const;
};

struct VisitsConfig {
  visits::StayPointParams stay;
  double snap_radius_m = 100.0;
};

struct ModelConfig {
  std::size_t k = 7;
  gmm::CovKind cov_kind = gmm::CovKind::Tied;
  std::size_t k_max = 21;
  std::vector<gmm::CovKind> kinds{std::begin(gmm::kAllKinds), std::end(gmm::kAllKinds)};
  visits::Transform transform = visits::Transform::Log1p;
  unsigned n_init = 5;
  std::size_t max_iter = 500;
  double tol = 1e-6;
  double reg_covar = 1e-6;
};

struct PatternsConfig {
  std::size_t k_m = 3;
  double cell_deg = 0.005;
  std::size_t top_k = 5;
  std::optional<patterns::Aoi> aoi;
};

struct PipelineConfig {
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
  std::uint64_t seed = 42;
  IngestConfig ingest;
  QualityConfig quality;
  VisitsConfig visits;
  ModelConfig model;
  classify::LabelingRules classify;
  PatternsConfig patterns;

  /// Effective configuration, fully expanded with defaults. Paths are
  /// written as given after resolution.
  nlohmann::json to_json() const;
};

/// Parses and validates. Relative paths resolve against `base_dir`.
/// Unknown keys are rejected. Throws ConfigError.
PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

PipelineConfig load_config(const std::filesystem::path& path, const nlohmann::json& overrides = {});

/// Recursive object merge; `patch` values win.
void merge_json(nlohmann::json& target, const nlohmann::json& patch);

}  // namespace visitscope
