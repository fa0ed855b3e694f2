#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "visitscope/types.hpp"

// Synthetic mobility population with known stays. Used for the bundled
// fixture, the end-to-end smoke corpus and the determinism checks.
namespace visitscope::synth {

struct PopulationParams {
  std::size_t users = 5;
  int days = 8;
  std::size_t pois = 40;
  std::uint64_t seed = 7;
  int sample_s = 300;
  int start_year = 2024;  // 2024-03-04 is a Monday
  unsigned start_month = 3;
  unsigned start_day = 4;
  double lat0 = 39.90;
  double lon0 = 116.35;
  double spacing_m = 1200.0;
  double jitter_m = 6.0;
  double speed_mps = 30.0 / 3.6;
};

struct Population {
  std::vector<MobilityRecord> records;  // user-major, chronological
  std::vector<PoiRecord> pois;
  std::vector<Visit> truth;  // planted stays; poi_id empty for off-PoI stops
};

Population generate_population(const PopulationParams& params);

std::string user_name(std::size_t u);

/// `user_id,lat,lon,timestamp` with ISO 8601 timestamps.
void write_trajectory_csv(std::ostream& out, std::span<const MobilityRecord> records);

/// Geolife-style tree: root/<user>/Trajectory/<yyyymmdd>.plt, one file per day.
void write_plt_corpus(const std::filesystem::path& root, std::span<const MobilityRecord> records);

}  // namespace visitscope::synth
