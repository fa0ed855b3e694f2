#include "visitscope/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "visitscope/csv.hpp"

namespace visitscope::ingest {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool parse_double(std::string_view s, double& out) {
  s = csv::trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, std::int64_t& out) {
  s = csv::trim(s);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc{} && p == s.data() + s.size();
}

bool is_blank(std::string_view line) { return csv::trim(line).empty(); }

std::size_t find_column(const std::vector<std::string>& header, const std::string& name,
                        const char* role) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (csv::trim(header[i]) == name) return i;
  throw IngestError(std::string("missing column '") + name + "' (mapped as " + role + ")");
}

std::optional<Timestamp> parse_time(std::string_view s, const TrajectoryColumns& c) {
  s = csv::trim(s);
  switch (c.time_format) {
    case TimeFormat::Iso8601:
      return parse_iso8601(s);
    case TimeFormat::EpochSeconds: {
      std::int64_t v = 0;
      if (!parse_int(s, v)) return std::nullopt;
      return v;
    }
    case TimeFormat::EpochMillis: {
      std::int64_t v = 0;
      if (!parse_int(s, v)) return std::nullopt;
      return v >= 0 ? v / 1000 : -((-v + 999) / 1000);
    }
    case TimeFormat::Pattern:
      return parse_with_format(s, c.time_pattern);
  }
  return std::nullopt;
}

void require_readable(std::istream& in) {
  if (!in.good()) throw IngestError("input stream is not readable");
}

}  // namespace

double round_coordinate(double v) { return std::round(v * 1e6) / 1e6; }

ParseResult<MobilityRecord> parse_plt(std::istream& in, const UserId& user_id) {
  require_readable(in);
  ParseResult<MobilityRecord> out;
  std::string line;
  int header = 0;
  std::vector<std::string> f;
  while (std::getline(in, line)) {
    if (header < kPltHeaderLines) {
      ++header;
      continue;
    }
    if (is_blank(line)) continue;
    ++out.stats.lines;
    double lat = 0, lon = 0;
    bool ok = csv::split_record(line, ',', f) && f.size() >= 7 && parse_double(f[0], lat) &&
              parse_double(f[1], lon) && valid_coordinate(lat, lon);
    std::optional<Timestamp> t;
    if (ok) {
      const std::string stamp = std::string(csv::trim(f[5])) + " " + std::string(csv::trim(f[6]));
      t = parse_iso8601(stamp);
      ok = t.has_value();
    }
    if (!ok) {
      ++out.stats.skipped;
      continue;
    }
    out.rows.push_back({user_id, round_coordinate(lat), round_coordinate(lon), *t});
    ++out.stats.ok;
  }
  if (in.bad()) throw IngestError("read error while parsing PLT stream");
  return out;
}

ParseResult<MobilityRecord> parse_plt_file(const fs::path& path, const UserId& user_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  return parse_plt(in, user_id);
}

std::vector<PltSource> discover_plt(const fs::path& root) {
  if (!fs::is_directory(root)) throw IngestError("not a directory: " + root.string());
  std::vector<PltSource> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".plt") continue;
    const fs::path rel = fs::relative(entry.path(), root);
    const std::string user = rel.begin() != rel.end() && std::next(rel.begin()) != rel.end()
                                 ? rel.begin()->string()
                                 : root.filename().string();
    out.push_back({user, entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const PltSource& a, const PltSource& b) {
    return std::tie(a.user_id, a.path) < std::tie(b.user_id, b.path);
  });
  return out;
}

ParseResult<MobilityRecord> parse_trajectory_csv(std::istream& in, const TrajectoryColumns& c) {
  require_readable(in);
  ParseResult<MobilityRecord> out;
  std::string line;
  std::vector<std::string> f;
  if (!std::getline(in, line) || !csv::split_record(line, c.delimiter, f))
    throw IngestError("trajectory CSV has no header row");
  if (!f.empty() && f[0].starts_with("\xEF\xBB\xBF")) f[0].erase(0, 3);
  const std::size_t iu = find_column(f, c.user, "user");
  const std::size_t ila = find_column(f, c.lat, "lat");
  const std::size_t ilo = find_column(f, c.lon, "lon");
  const std::size_t it = find_column(f, c.timestamp, "timestamp");
  const std::size_t need = std::max({iu, ila, ilo, it}) + 1;

  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    ++out.stats.lines;
    double lat = 0, lon = 0;
    std::optional<Timestamp> t;
    const bool ok = csv::split_record(line, c.delimiter, f) && f.size() >= need &&
                    !csv::trim(f[iu]).empty() && parse_double(f[ila], lat) && parse_double(f[ilo], lon) &&
                    valid_coordinate(lat, lon) && (t = parse_time(f[it], c)).has_value();
    if (!ok) {
      ++out.stats.skipped;
      continue;
    }
    out.rows.push_back({std::string(csv::trim(f[iu])), round_coordinate(lat), round_coordinate(lon), *t});
    ++out.stats.ok;
  }
  if (in.bad()) throw IngestError("read error while parsing trajectory CSV");
  return out;
}

ParseResult<PoiRecord> parse_poi_file(std::istream& in, const PoiColumns& c) {
  require_readable(in);
  ParseResult<PoiRecord> out;
  std::string line;
  std::vector<std::string> f;
  if (!std::getline(in, line) || !csv::split_record(line, c.delimiter, f))
    throw IngestError("PoI CSV has no header row");
  if (!f.empty() && f[0].starts_with("\xEF\xBB\xBF")) f[0].erase(0, 3);
  const std::size_t ii = find_column(f, c.id, "id");
  const std::size_t ila = find_column(f, c.lat, "lat");
  const std::size_t ilo = find_column(f, c.lon, "lon");
  const std::size_t ic = find_column(f, c.category, "category");
  const std::size_t need = std::max({ii, ila, ilo, ic}) + 1;

  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    ++out.stats.lines;
    double lat = 0, lon = 0;
    const bool ok = csv::split_record(line, c.delimiter, f) && f.size() >= need &&
                    !csv::trim(f[ii]).empty() && !csv::trim(f[ic]).empty() && parse_double(f[ila], lat) &&
                    parse_double(f[ilo], lon) && valid_coordinate(lat, lon);
    if (!ok) {
      ++out.stats.skipped;
      continue;
    }
    out.rows.push_back({std::string(csv::trim(f[ii])), round_coordinate(lat), round_coordinate(lon),
                        std::string(csv::trim(f[ic]))});
    ++out.stats.ok;
  }
  if (in.bad()) throw IngestError("read error while parsing PoI CSV");
  return out;
}

TraceMap build_traces(std::span<const MobilityRecord> records, BuildStats* stats) {
  BuildStats local;
  local.input = records.size();
  std::map<UserId, std::vector<MobilityRecord>> by_user;
  for (const auto& r : records) by_user[r.user_id].push_back(r);

  TraceMap out;
  for (auto& [user, rows] : by_user) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const MobilityRecord& a, const MobilityRecord& b) { return a.t < b.t; });
    MobilityTrace trace{user, {}};
    trace.records.reserve(rows.size());
    for (auto& r : rows) {
      if (!trace.records.empty() && trace.records.back().t == r.t) {
        const auto& kept = trace.records.back();
        if (kept.lat == r.lat && kept.lon == r.lon)
          ++local.duplicates;
        else
          ++local.conflicts;
        continue;
      }
      trace.records.push_back(std::move(r));
    }
    out.emplace(user, std::move(trace));
  }
  if (stats) *stats = local;
  return out;
}

bool trace_is_canonical(const MobilityTrace& trace) {
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    if (r.user_id != trace.user_id || !valid_coordinate(r.lat, r.lon)) return false;
    if (i > 0 && trace.records[i - 1].t >= r.t) return false;
  }
  return true;
}

std::string encode_user_file(const UserId& user) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (std::size_t i = 0; i < user.size(); ++i) {
    const auto c = static_cast<unsigned char>(user[i]);
    const bool safe = std::isalnum(c) || c == '_' || c == '-' || (c == '.' && i > 0);
    if (safe) {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out.empty() ? "%" : out;
}

json to_json(const DatasetManifest& m) {
  json j;
  j["sources"] = json::array();
  for (const auto& s : m.sources)
    j["sources"].push_back({{"path", s.path},
                            {"kind", s.kind},
                            {"lines", s.stats.lines},
                            {"ok", s.stats.ok},
                            {"skipped", s.stats.skipped}});
  j["users"] = json::array();
  for (const auto& u : m.users)
    j["users"].push_back({{"user_id", u.user_id},
                          {"file", u.file},
                          {"records", u.records},
                          {"first", format_iso8601(u.first)},
                          {"last", format_iso8601(u.last)}});
  j["build"] = {{"input", m.build.input}, {"duplicates", m.build.duplicates}, {"conflicts", m.build.conflicts}};
  j["pois"] = {{"count", m.poi_count}, {"categories", m.poi_categories}};
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  for (const auto& s : j.at("sources"))
    m.sources.push_back({s.at("path"), s.at("kind"),
                         ParseStats{s.at("lines"), s.at("ok"), s.at("skipped")}});
  for (const auto& u : j.at("users")) {
    UserSummary us;
    us.user_id = u.at("user_id");
    us.file = u.at("file");
    us.records = u.at("records");
    us.first = parse_iso8601(u.at("first").get<std::string>()).value_or(0);
    us.last = parse_iso8601(u.at("last").get<std::string>()).value_or(0);
    m.users.push_back(std::move(us));
  }
  m.build.input = j.at("build").at("input");
  m.build.duplicates = j.at("build").at("duplicates");
  m.build.conflicts = j.at("build").at("conflicts");
  m.poi_count = j.at("pois").at("count");
  m.poi_categories = j.at("pois").at("categories");
  return m;
}

void write_pois_csv(std::ostream& out, std::span<const PoiRecord> pois) {
  out << "poi_id,lat,lon,category\n";
  for (const auto& p : pois)
    out << csv::escape(p.poi_id) << ',' << csv::fixed(p.lat, 6) << ',' << csv::fixed(p.lon, 6) << ','
        << csv::escape(p.category) << '\n';
}

DatasetManifest write_store(const fs::path& dir, const TraceMap& traces, std::span<const PoiRecord> pois,
                            DatasetManifest manifest) {
  fs::create_directories(dir / "traces");
  manifest.users.clear();
  for (const auto& [user, trace] : traces) {
    UserSummary us;
    us.user_id = user;
    us.file = "traces/" + encode_user_file(user) + ".csv";
    us.records = trace.records.size();
    if (!trace.records.empty()) {
      us.first = trace.records.front().t;
      us.last = trace.records.back().t;
    }
    std::ofstream out(dir / us.file, std::ios::binary);
    if (!out) throw IngestError("cannot write " + (dir / us.file).string());
    out << "t_iso8601,lat,lon\n";
    for (const auto& r : trace.records)
      out << format_iso8601(r.t) << ',' << csv::fixed(r.lat, 6) << ',' << csv::fixed(r.lon, 6) << '\n';
    manifest.users.push_back(std::move(us));
  }
  {
    std::ofstream out(dir / "pois.csv", std::ios::binary);
    if (!out) throw IngestError("cannot write " + (dir / "pois.csv").string());
    write_pois_csv(out, pois);
  }
  std::set<std::string> categories;
  for (const auto& p : pois) categories.insert(p.category);
  manifest.poi_count = pois.size();
  manifest.poi_categories = categories.size();
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << to_json(manifest).dump(2) << '\n';
  return manifest;
}

Store read_store(const fs::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw IngestError("missing " + (dir / "manifest.json").string());
  Store store;
  try {
    store.manifest = manifest_from_json(json::parse(mf));
  } catch (const json::exception& e) {
    throw IngestError("bad manifest: " + std::string(e.what()));
  }
  std::vector<std::string> f;
  for (const auto& u : store.manifest.users) {
    std::ifstream in(dir / u.file);
    if (!in) throw IngestError("missing trace file " + (dir / u.file).string());
    MobilityTrace trace{u.user_id, {}};
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (is_blank(line)) continue;
      double lat = 0, lon = 0;
      std::optional<Timestamp> t;
      if (!csv::split_record(line, ',', f) || f.size() != 3 || !(t = parse_iso8601(f[0])) ||
          !parse_double(f[1], lat) || !parse_double(f[2], lon))
        throw IngestError("corrupt trace row in " + u.file + ": " + line);
      trace.records.push_back({u.user_id, lat, lon, *t});
    }
    if (trace.records.size() != u.records)
      throw IngestError("row count mismatch for " + u.file);
    store.traces.emplace(u.user_id, std::move(trace));
  }
  std::ifstream pin(dir / "pois.csv");
  if (pin) store.pois = parse_poi_file(pin, PoiColumns{}).rows;
  return store;
}

}  // namespace visitscope::ingest
