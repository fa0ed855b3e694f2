#include "visitscope/visits.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>

#include "visitscope/csv.hpp"

namespace visitscope::visits {

std::vector<Visit> extract_stay_points(const MobilityTrace& trace, const StayPointParams& params) {
  std::vector<Visit> out;
  const auto& rec = trace.records;
  const std::size_t n = rec.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && geo::haversine(rec[i].lat, rec[i].lon, rec[j].lat, rec[j].lon) <= params.dist_thresh_m) ++j;
    const auto span = static_cast<double>(rec[j - 1].t - rec[i].t);
    if (j - i >= 2 && span >= params.time_thresh_s) {
      double lat = 0.0, lon = 0.0;
      for (std::size_t m = i; m < j; ++m) {
        lat += rec[m].lat;
        lon += rec[m].lon;
      }
      const auto cnt = static_cast<double>(j - i);
      Visit v;
      v.user_id = trace.user_id;
      v.lat = lat / cnt;
      v.lon = lon / cnt;
      v.arrival = rec[i].t;
      v.departure = rec[j - 1].t;
      out.push_back(std::move(v));
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

std::optional<PoiId> snap_to_poi(const Visit& visit, const geo::SpatialIndex& index, double radius_m) {
  const auto hit = index.nearest(visit.lat, visit.lon, radius_m);
  if (!hit) return std::nullopt;
  return index.poi(hit->index).poi_id;
}

std::size_t snap_all(std::span<Visit> visits, const geo::SpatialIndex& index, double radius_m) {
  std::size_t n = 0;
  for (auto& v : visits) {
    v.poi_id = snap_to_poi(v, index, radius_m);
    n += v.poi_id.has_value();
  }
  return n;
}

std::vector<VisitFeature> aggregate_features(std::span<const Visit> visits, AggregateStats* stats) {
  struct Acc {
    std::set<std::int64_t> days;
    double total = 0.0;
    std::int64_t n = 0;
  };
  std::map<std::pair<UserId, PoiId>, Acc> groups;
  AggregateStats local;
  for (const auto& v : visits) {
    if (!v.poi_id) {
      ++local.unsnapped;
      continue;
    }
    ++local.snapped;
    auto& a = groups[{v.user_id, *v.poi_id}];
    a.days.insert(day_index(v.arrival));
    a.total += static_cast<double>(v.dwell_s());
    ++a.n;
  }
  std::vector<VisitFeature> out;
  out.reserve(groups.size());
  for (const auto& [key, a] : groups) {
    VisitFeature f;
    f.user_id = key.first;
    f.poi_id = key.second;
    f.n_days = static_cast<std::int64_t>(a.days.size());
    f.n_visits = a.n;
    f.total_dwell_s = a.total;
    f.mean_dwell_s = a.total / static_cast<double>(a.n);
    out.push_back(std::move(f));
  }
  if (stats) *stats = local;
  return out;
}

const char* to_string(Transform t) { return t == Transform::Log1p ? "log1p" : "none"; }

Transform transform_from_string(const std::string& s) {
  if (s == "none") return Transform::None;
  if (s == "log1p") return Transform::Log1p;
  throw std::invalid_argument("unknown transform '" + s + "'");
}

double apply_transform(double v, Transform t) { return t == Transform::Log1p ? std::log1p(v) : v; }
double invert_transform(double v, Transform t) { return t == Transform::Log1p ? std::expm1(v) : v; }

FeatureMatrix feature_matrix(std::span<const VisitFeature> features, Transform transform) {
  FeatureMatrix fm;
  fm.transform = transform;
  fm.values = Matrix(features.size(), 2);
  fm.index.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    fm.values(i, 0) = apply_transform(static_cast<double>(features[i].n_days), transform);
    fm.values(i, 1) = apply_transform(features[i].mean_dwell_s / 3600.0, transform);
    fm.index.push_back({features[i].user_id, features[i].poi_id});
  }
  return fm;
}

namespace {

double to_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

std::int64_t to_int(const std::string& s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::runtime_error("bad integer '" + s + "'");
  return v;
}

template <class F>
void for_each_row(std::istream& in, std::size_t columns, F&& f) {
  std::string line;
  std::vector<std::string> fields;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    if (!csv::split_record(line, ',', fields) || fields.size() != columns)
      throw std::runtime_error("malformed row: " + line);
    f(fields);
  }
}

}  // namespace

void write_visits_csv(std::ostream& out, std::span<const Visit> visits) {
  out << "user_id,poi_id,arrival,departure,dwell_s,lat,lon\n";
  for (const auto& v : visits)
    out << csv::escape(v.user_id) << ',' << csv::escape(v.poi_id.value_or("")) << ',' << format_iso8601(v.arrival)
        << ',' << format_iso8601(v.departure) << ',' << v.dwell_s() << ',' << csv::fixed(v.lat, 6) << ','
        << csv::fixed(v.lon, 6) << '\n';
}

std::vector<Visit> read_visits_csv(std::istream& in) {
  std::vector<Visit> out;
  for_each_row(in, 7, [&](const std::vector<std::string>& f) {
    Visit v;
    v.user_id = f[0];
    if (!f[1].empty()) v.poi_id = f[1];
    const auto a = parse_iso8601(f[2]);
    const auto d = parse_iso8601(f[3]);
    if (!a || !d) throw std::runtime_error("bad visit timestamps");
    v.arrival = *a;
    v.departure = *d;
    v.lat = to_double(f[5]);
    v.lon = to_double(f[6]);
    out.push_back(std::move(v));
  });
  return out;
}

void write_features_csv(std::ostream& out, std::span<const VisitFeature> features) {
  out << "user_id,poi_id,n_days,mean_dwell_h,n_visits,total_dwell_h\n";
  for (const auto& f : features)
    out << csv::escape(f.user_id) << ',' << csv::escape(f.poi_id) << ',' << f.n_days << ','
        << csv::exact(f.mean_dwell_s / 3600.0) << ',' << f.n_visits << ',' << csv::exact(f.total_dwell_s / 3600.0)
        << '\n';
}

std::vector<VisitFeature> read_features_csv(std::istream& in) {
  std::vector<VisitFeature> out;
  for_each_row(in, 6, [&](const std::vector<std::string>& f) {
    VisitFeature v;
    v.user_id = f[0];
    v.poi_id = f[1];
    v.n_days = to_int(f[2]);
    v.mean_dwell_s = to_double(f[3]) * 3600.0;
    v.n_visits = to_int(f[4]);
    v.total_dwell_s = to_double(f[5]) * 3600.0;
    out.push_back(std::move(v));
  });
  return out;
}

}  // namespace visitscope::visits
