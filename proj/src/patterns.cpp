#include "visitscope/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "visitscope/csv.hpp"
#include "visitscope/kmeans.hpp"

namespace visitscope::patterns {

std::vector<LabeledVisit> label_visits(std::span<const Visit> visits,
                                       std::span<const classify::LabeledFeature> labeled) {
  std::map<std::pair<UserId, PoiId>, Label> lookup;
  for (const auto& l : labeled) lookup[{l.feature.user_id, l.feature.poi_id}] = l.label;
  std::vector<LabeledVisit> out;
  for (const auto& v : visits) {
    if (!v.poi_id) continue;
    const auto it = lookup.find({v.user_id, *v.poi_id});
    if (it == lookup.end()) continue;
    out.push_back({v, it->second});
  }
  return out;
}

std::vector<Label> visit_sequence(std::span<const LabeledVisit> user_visits) {
  std::vector<const LabeledVisit*> order;
  for (const auto& v : user_visits) order.push_back(&v);
  std::stable_sort(order.begin(), order.end(),
                   [](const LabeledVisit* a, const LabeledVisit* b) { return a->visit.arrival < b->visit.arrival; });
  std::vector<Label> seq;
  seq.reserve(order.size());
  for (const auto* v : order) seq.push_back(v->label);
  return seq;
}

std::int64_t TransitionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

TransitionMatrix transition_matrix(const UserId& user, std::span<const Label> sequence) {
  TransitionMatrix m;
  m.user_id = user;
  for (std::size_t i = 1; i < sequence.size(); ++i)
    ++m.counts[classify::index_of(sequence[i - 1])][classify::index_of(sequence[i])];
  for (std::size_t r = 0; r < kLabelCount; ++r) {
    std::int64_t row = 0;
    for (auto c : m.counts[r]) row += c;
    if (row == 0) continue;
    for (std::size_t c = 0; c < kLabelCount; ++c)
      m.probs[r][c] = static_cast<double>(m.counts[r][c]) / static_cast<double>(row);
  }
  return m;
}

std::vector<TransitionMatrix> transition_matrices(std::span<const LabeledVisit> visits) {
  std::map<UserId, std::vector<LabeledVisit>> by_user;
  for (const auto& v : visits) by_user[v.visit.user_id].push_back(v);
  std::vector<TransitionMatrix> out;
  for (const auto& [user, vs] : by_user) out.push_back(transition_matrix(user, visit_sequence(vs)));
  return out;
}

MotifClusterResult cluster_motifs(std::span<const TransitionMatrix> matrices, std::size_t k_m, std::uint64_t seed,
                                  unsigned restarts) {
  if (k_m == 0) throw std::invalid_argument("k_m must be >= 1");
  MotifClusterResult out;
  Matrix data;
  for (const auto& m : matrices) {
    if (m.is_zero()) continue;
    std::vector<double> flat;
    flat.reserve(kLabelCount * kLabelCount);
    for (const auto& row : m.probs) flat.insert(flat.end(), row.begin(), row.end());
    data.push_row(flat);
    out.users.push_back(m.user_id);
  }
  if (out.users.size() < k_m)
    throw std::invalid_argument("only " + std::to_string(out.users.size()) +
                                " users have transitions; use a smaller k_m (got " + std::to_string(k_m) + ")");
  kmeans::Params p;
  p.k = k_m;
  p.restarts = restarts;
  p.seed = seed;
  const auto r = kmeans::fit(data, p);
  out.cluster = r.labels;
  out.inertia = r.inertia;
  for (std::size_t j = 0; j < k_m; ++j) {
    Square s{};
    for (std::size_t a = 0; a < kLabelCount; ++a)
      for (std::size_t b = 0; b < kLabelCount; ++b) s[a][b] = r.centers(j, a * kLabelCount + b);
    out.centroids.push_back(s);
  }
  return out;
}

SemanticProfile semantic_top_k(std::span<const LabeledVisit> visits,
                               const std::unordered_map<PoiId, std::string>& category_of, std::size_t k) {
  SemanticProfile p;
  std::array<std::map<std::string, std::size_t>, kLabelCount> counts;
  for (const auto& v : visits) {
    if (!v.visit.poi_id) continue;
    const auto it = category_of.find(*v.visit.poi_id);
    if (it == category_of.end()) continue;
    const auto l = classify::index_of(v.label);
    ++counts[l][it->second];
    ++p.visits[l];
  }
  for (std::size_t l = 0; l < kLabelCount; ++l) {
    std::vector<CategoryShare> all;
    for (const auto& [cat, c] : counts[l])
      all.push_back({cat, static_cast<double>(c) / static_cast<double>(p.visits[l]), c});
    std::stable_sort(all.begin(), all.end(), [](const CategoryShare& a, const CategoryShare& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.category < b.category;
    });
    if (all.size() > k) all.resize(k);
    p.top[l] = std::move(all);
  }
  return p;
}

TemporalProfile temporal_profile(std::span<const LabeledVisit> visits, double weeks) {
  if (!(weeks > 0.0)) throw std::invalid_argument("weeks must be > 0");
  TemporalProfile p;
  p.weeks = weeks;
  // (label, user) -> histogram
  std::map<std::pair<std::size_t, UserId>, std::array<double, kWeekCells>> hist;
  for (const auto& v : visits) {
    const auto cell = static_cast<std::size_t>(day_of_week(v.visit.arrival) * 24 + hour_of_day(v.visit.arrival));
    auto [it, _] = hist.try_emplace({classify::index_of(v.label), v.visit.user_id});
    it->second[cell] += 1.0;
  }
  for (auto& [key, h] : hist) {
    double n = 0.0;
    for (double c : h) n += c;
    auto& out = p.intensity[key.first];
    for (std::size_t c = 0; c < kWeekCells; ++c) out[c] += h[c] / n;
    ++p.users[key.first];
  }
  for (std::size_t l = 0; l < kLabelCount; ++l) {
    if (p.users[l] == 0) continue;
    for (double& c : p.intensity[l]) c = c / static_cast<double>(p.users[l]) / weeks;
  }
  return p;
}

std::int64_t cell_index(double v, double origin, double cell) {
  const double q = (v - origin) / cell;
  auto idx = static_cast<std::int64_t>(std::floor(q));
  if (static_cast<double>(idx) == q && idx > 0) --idx;
  return idx;
}

SpatialGrid spatial_grid(std::span<const LabeledVisit> visits, double cell_deg, std::optional<Aoi> aoi) {
  if (!(cell_deg > 0.0)) throw std::invalid_argument("cell size must be > 0");
  SpatialGrid g;
  g.cell_deg = cell_deg;
  if (aoi) {
    g.aoi = *aoi;
  } else if (!visits.empty()) {
    g.aoi = {visits[0].visit.lat, visits[0].visit.lat, visits[0].visit.lon, visits[0].visit.lon};
    for (const auto& v : visits) {
      g.aoi.lat_min = std::min(g.aoi.lat_min, v.visit.lat);
      g.aoi.lat_max = std::max(g.aoi.lat_max, v.visit.lat);
      g.aoi.lon_min = std::min(g.aoi.lon_min, v.visit.lon);
      g.aoi.lon_max = std::max(g.aoi.lon_max, v.visit.lon);
    }
  }
  for (const auto& v : visits) {
    const double lat = v.visit.lat, lon = v.visit.lon;
    if (lat < g.aoi.lat_min || lat > g.aoi.lat_max || lon < g.aoi.lon_min || lon > g.aoi.lon_max) {
      ++g.outside;
      continue;
    }
    const auto key = std::make_pair(cell_index(lat, g.aoi.lat_min, cell_deg), cell_index(lon, g.aoi.lon_min, cell_deg));
    ++g.counts[classify::index_of(v.label)][key];
  }
  return g;
}

void write_transitions_csv(std::ostream& out, std::span<const TransitionMatrix> matrices) {
  out << "user_id,from,to,count,prob\n";
  for (const auto& m : matrices)
    for (std::size_t a = 0; a < kLabelCount; ++a)
      for (std::size_t b = 0; b < kLabelCount; ++b)
        out << csv::escape(m.user_id) << ',' << classify::code(classify::label_at(a)) << ','
            << classify::code(classify::label_at(b)) << ',' << m.counts[a][b] << ',' << csv::exact(m.probs[a][b])
            << '\n';
}

nlohmann::json motifs_json(const MotifClusterResult& motifs) {
  nlohmann::json centroids = nlohmann::json::array();
  for (std::size_t j = 0; j < motifs.centroids.size(); ++j) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : motifs.centroids[j]) rows.push_back(std::vector<double>(row.begin(), row.end()));
    std::size_t members = std::count(motifs.cluster.begin(), motifs.cluster.end(), j);
    centroids.push_back({{"cluster", j}, {"members", members}, {"matrix", rows}});
  }
  nlohmann::json users = nlohmann::json::array();
  for (std::size_t i = 0; i < motifs.users.size(); ++i)
    users.push_back({{"user_id", motifs.users[i]}, {"cluster", motifs.cluster[i]}});
  std::vector<std::string> labels;
  for (std::size_t l = 0; l < kLabelCount; ++l) labels.emplace_back(classify::code(classify::label_at(l)));
  return {{"labels", labels}, {"inertia", motifs.inertia}, {"centroids", centroids}, {"users", users}};
}

void write_semantic_csv(std::ostream& out, const SemanticProfile& profile) {
  out << "label,rank,category,share,count,label_visits\n";
  for (std::size_t l = 0; l < kLabelCount; ++l)
    for (std::size_t r = 0; r < profile.top[l].size(); ++r) {
      const auto& s = profile.top[l][r];
      out << classify::code(classify::label_at(l)) << ',' << r + 1 << ',' << csv::escape(s.category) << ','
          << csv::exact(s.share) << ',' << s.count << ',' << profile.visits[l] << '\n';
    }
}

void write_temporal_csv(std::ostream& out, const TemporalProfile& profile) {
  out << "label,dow,hour,intensity\n";
  for (std::size_t l = 0; l < kLabelCount; ++l)
    for (std::size_t c = 0; c < kWeekCells; ++c)
      out << classify::code(classify::label_at(l)) << ',' << c / 24 << ',' << c % 24 << ','
          << csv::exact(profile.intensity[l][c]) << '\n';
}

void write_spatial_csv(std::ostream& out, const SpatialGrid& grid) {
  out << "label,lat_idx,lon_idx,count\n";
  for (std::size_t l = 0; l < kLabelCount; ++l)
    for (const auto& [cell, c] : grid.counts[l])
      out << classify::code(classify::label_at(l)) << ',' << cell.first << ',' << cell.second << ',' << c << '\n';
}

nlohmann::json spatial_meta_json(const SpatialGrid& grid) {
  nlohmann::json totals = nlohmann::json::object();
  for (std::size_t l = 0; l < kLabelCount; ++l) {
    std::size_t t = 0;
    for (const auto& [_, c] : grid.counts[l]) t += c;
    totals[classify::code(classify::label_at(l))] = t;
  }
  return {{"cell_deg", grid.cell_deg},
          {"aoi",
           {{"lat_min", grid.aoi.lat_min},
            {"lat_max", grid.aoi.lat_max},
            {"lon_min", grid.aoi.lon_min},
            {"lon_max", grid.aoi.lon_max}}},
          {"edge_rule", "interior edges belong to the lower cell"},
          {"outside", grid.outside},
          {"totals", totals}};
}

}  // namespace visitscope::patterns
