#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visitscope/types.hpp"

namespace visitscope::ingest {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-file line accounting: `ok + skipped == lines`.
struct ParseStats {
  std::size_t lines = 0;
  std::size_t ok = 0;
  std::size_t skipped = 0;

  ParseStats& operator+=(const ParseStats& o) {
    lines += o.lines;
    ok += o.ok;
    skipped += o.skipped;
    return *this;
  }
};

template <class Row>
struct ParseResult {
  std::vector<Row> rows;
  ParseStats stats;
};

/// Number of header lines preceding data in a Geolife PLT file.
inline constexpr int kPltHeaderLines = 6;

/// Parses a Geolife PLT stream. Blank lines are ignored; malformed data lines
/// are skipped and counted.
ParseResult<MobilityRecord> parse_plt(std::istream& in, const UserId& user_id);
ParseResult<MobilityRecord> parse_plt_file(const std::filesystem::path& path, const UserId& user_id);

struct PltSource {
  UserId user_id;
  std::filesystem::path path;
};

/// Finds every `*.plt` below `root`; the user id is the first path component
/// under `root` (the Geolife `Data/<user>/Trajectory/*.plt` layout).
std::vector<PltSource> discover_plt(const std::filesystem::path& root);

enum class TimeFormat { Iso8601, EpochSeconds, EpochMillis, Pattern };

struct TrajectoryColumns {
  std::string user = "user_id";
  std::string lat = "lat";
  std::string lon = "lon";
  std::string timestamp = "timestamp";
  TimeFormat time_format = TimeFormat::Iso8601;
  std::string time_pattern;  // used when time_format == Pattern
  char delimiter = ',';
};

struct PoiColumns {
  std::string id = "poi_id";
  std::string lat = "lat";
  std::string lon = "lon";
  std::string category = "category";
  char delimiter = ',';
};

/// Throws IngestError naming the column when a mapped column is missing from
/// the header.
ParseResult<MobilityRecord> parse_trajectory_csv(std::istream& in, const TrajectoryColumns& columns);
ParseResult<PoiRecord> parse_poi_file(std::istream& in, const PoiColumns& columns);

struct BuildStats {
  std::size_t input = 0;
  std::size_t duplicates = 0;  // identical (user, t, lat, lon) rows collapsed
  std::size_t conflicts = 0;   // same (user, t) with different coordinates; first kept
};

/// Groups by user, sorts each trace by time (stable, so input order breaks
/// ties) and collapses repeated timestamps.
TraceMap build_traces(std::span<const MobilityRecord> records, BuildStats* stats = nullptr);

/// True when `trace` is strictly increasing in time and single-user.
bool trace_is_canonical(const MobilityTrace& trace);

/// Rounds to the 6 decimals retained by the canonical store.
double round_coordinate(double v);

struct SourceSummary {
  std::string path;
  std::string kind;  // "plt" | "csv" | "poi"
  ParseStats stats;
};

struct UserSummary {
  UserId user_id;
  std::string file;
  std::size_t records = 0;
  Timestamp first = 0;
  Timestamp last = 0;
};

struct DatasetManifest {
  std::vector<SourceSummary> sources;
  std::vector<UserSummary> users;
  BuildStats build;
  std::size_t poi_count = 0;
  std::size_t poi_categories = 0;
};

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

/// File-name-safe encoding of a user id (percent-escapes anything outside
/// [A-Za-z0-9_-] and a leading '.').
std::string encode_user_file(const UserId& user);

/// Writes `<dir>/traces/<user>.csv` (t_iso8601,lat,lon), `<dir>/pois.csv`
/// and `<dir>/manifest.json`. Returns the manifest with user summaries filled.
DatasetManifest write_store(const std::filesystem::path& dir, const TraceMap& traces,
                            std::span<const PoiRecord> pois, DatasetManifest manifest);

struct Store {
  DatasetManifest manifest;
  TraceMap traces;
  std::vector<PoiRecord> pois;
};

Store read_store(const std::filesystem::path& dir);

void write_pois_csv(std::ostream& out, std::span<const PoiRecord> pois);

}  // namespace visitscope::ingest
