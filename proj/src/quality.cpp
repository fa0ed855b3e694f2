#include "visitscope/quality.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "visitscope/csv.hpp"
#include "visitscope/geo.hpp"
#include "visitscope/parallel.hpp"

namespace visitscope::quality {

CompletenessParams CompletenessParams::from_hours(double tau_h, int T_days, double P_h, double max_speed_kmh) {
  CompletenessParams p;
  p.tau_s = static_cast<std::int64_t>(std::llround(tau_h * kSecondsPerHour));
  p.period_s = static_cast<std::int64_t>(std::llround(P_h * kSecondsPerHour));
  p.period_count = T_days;
  p.max_speed_kmh = max_speed_kmh;
  p.validate();
  return p;
}

void CompletenessParams::validate() const {
  if (period_s <= 0) throw std::invalid_argument("P must be positive");
  if (tau_s <= 0) throw std::invalid_argument("tau must be positive");
  if (tau_s > period_s) throw std::invalid_argument("tau must not exceed P");
  if (period_count < 1) throw std::invalid_argument("T must be at least 1");
  if (!(max_speed_kmh > 0.0)) throw std::invalid_argument("max_speed must be positive");
}

TemporalCompleteness temporal_completeness(const MobilityTrace& trace, const CompletenessParams& params,
                                           Timestamp window_start) {
  params.validate();
  const std::int64_t nbins = params.bins_per_period();
  const std::int64_t span = params.span_s();
  std::vector<std::int64_t> covered(static_cast<std::size_t>(params.period_count), 0);
  std::vector<std::int64_t> last_bin(static_cast<std::size_t>(params.period_count), -1);

  for (const auto& r : trace.records) {
    const std::int64_t x = r.t - window_start;
    if (x <= 0 || x > span) continue;
    const std::int64_t unit = (x - 1) / params.period_s;
    const std::int64_t y = x - unit * params.period_s;  // in ]0, P]
    const std::int64_t bin = std::min((y - 1) / params.tau_s, nbins - 1);
    // Records are time-ordered, so a bin repeats only consecutively.
    auto& lb = last_bin[static_cast<std::size_t>(unit)];
    if (lb != bin) {
      lb = bin;
      ++covered[static_cast<std::size_t>(unit)];
    }
  }

  TemporalCompleteness out;
  out.per_period.reserve(covered.size());
  double sum = 0.0;
  for (auto c : covered) {
    const double s = std::clamp(static_cast<double>(c) / static_cast<double>(nbins), 0.0, 1.0);
    out.per_period.push_back(s);
    sum += s;
  }
  out.mu_T = std::clamp(sum / static_cast<double>(params.period_count), 0.0, 1.0);
  return out;
}

SpatialCompleteness spatial_completeness(const MobilityTrace& trace, const CompletenessParams& params) {
  params.validate();
  SpatialCompleteness out;
  const double vmax = params.max_speed_mps();
  const auto& rec = trace.records;
  std::size_t valid = 0;
  for (std::size_t i = 1; i < rec.size(); ++i) {
    const double dt = static_cast<double>(rec[i].t - rec[i - 1].t);
    const double dr = geo::haversine(rec[i - 1].lat, rec[i - 1].lon, rec[i].lat, rec[i].lon);
    if (dt == 0.0) {
      if (dr == 0.0) {
        ++out.skipped;
        continue;
      }
      ++out.pairs;
      ++out.invalid;
      continue;
    }
    ++out.pairs;
    if (dt <= static_cast<double>(params.period_s) && dr / dt <= vmax)
      ++valid;
    else
      ++out.invalid;
  }
  if (out.pairs == 0) {
    out.no_motion = true;
    out.mu_S = 1.0;
  } else {
    out.mu_S = static_cast<double>(valid) / static_cast<double>(out.pairs);
  }
  return out;
}

MobilityTrace slice_window(const MobilityTrace& trace, Timestamp begin, Timestamp end) {
  MobilityTrace out{trace.user_id, {}};
  auto lo = std::upper_bound(trace.records.begin(), trace.records.end(), begin,
                             [](Timestamp t, const MobilityRecord& r) { return t < r.t; });
  auto hi = std::upper_bound(trace.records.begin(), trace.records.end(), end,
                             [](Timestamp t, const MobilityRecord& r) { return t < r.t; });
  if (lo < hi) out.records.assign(lo, hi);
  return out;
}

Timestamp WindowAnchor::start_for(const MobilityTrace& trace) const {
  if (mode == Mode::Fixed || trace.records.empty()) return fixed_start;
  return day_start(trace.records.front().t);
}

UserScore score_user(const MobilityTrace& trace, const CompletenessParams& params, const WindowAnchor& anchor) {
  UserScore s;
  s.user_id = trace.user_id;
  s.window_start = anchor.start_for(trace);
  s.mu_T = temporal_completeness(trace, params, s.window_start).mu_T;
  s.mu_S = spatial_completeness(slice_window(trace, s.window_start, s.window_start + params.span_s()), params).mu_S;
  return s;
}

Distribution describe(std::span<const double> values, std::size_t bins) {
  Distribution d;
  d.histogram.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>(std::floor(std::clamp(v, 0.0, 1.0) * static_cast<double>(bins)));
    ++d.histogram[std::min(b, bins - 1)];
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  for (double q : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
    double v = 0.0;
    if (!sorted.empty()) {
      const double pos = q * static_cast<double>(sorted.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, sorted.size() - 1);
      v = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    }
    d.quantiles.emplace_back(q, v);
  }
  return d;
}

GridAssessment grid_assessment(const TraceMap& traces, std::span<const double> tau_set_h,
                               std::span<const int> T_set_d, const CompletenessParams& base,
                               const WindowAnchor& anchor, unsigned threads) {
  std::vector<const MobilityTrace*> users;
  users.reserve(traces.size());
  for (const auto& [_, t] : traces) users.push_back(&t);

  GridAssessment grid;
  for (double tau : tau_set_h) {
    for (int T : T_set_d) {
      auto params = CompletenessParams::from_hours(tau, T, static_cast<double>(base.period_s) / kSecondsPerHour,
                                                   base.max_speed_kmh);
      GridCell cell;
      cell.tau_h = tau;
      cell.T_d = T;
      cell.users.resize(users.size());
      parallel_for(users.size(), threads,
                   [&](std::size_t i) { cell.users[i] = score_user(*users[i], params, anchor); });
      std::vector<double> mt, ms;
      for (const auto& u : cell.users) {
        mt.push_back(u.mu_T);
        ms.push_back(u.mu_S);
      }
      cell.mu_T = describe(mt);
      cell.mu_S = describe(ms);
      grid.cells.push_back(std::move(cell));
    }
  }
  return grid;
}

std::vector<UserId> select_cohort(std::span<const UserScore> scores, const CohortCriteria& criteria) {
  std::vector<UserId> out;
  for (const auto& s : scores)
    if (s.mu_T >= criteria.mu_T_min && s.mu_S >= criteria.mu_S_min) out.push_back(s.user_id);
  std::sort(out.begin(), out.end());
  return out;
}

void write_reports_csv(std::ostream& out, const GridAssessment& grid) {
  out << "user_id,tau_h,T_d,mu_T,mu_S\n";
  for (const auto& c : grid.cells)
    for (const auto& u : c.users)
      out << csv::escape(u.user_id) << ',' << csv::exact(c.tau_h) << ',' << c.T_d << ',' << csv::exact(u.mu_T)
          << ',' << csv::exact(u.mu_S) << '\n';
}

nlohmann::json histograms_json(const GridAssessment& grid) {
  auto dist = [](const Distribution& d) {
    nlohmann::json q = nlohmann::json::array();
    for (auto [p, v] : d.quantiles) q.push_back({{"q", p}, {"value", v}});
    return nlohmann::json{{"bins", d.histogram.size()}, {"histogram", d.histogram}, {"quantiles", q}};
  };
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : grid.cells)
    cells.push_back({{"tau_h", c.tau_h},
                     {"T_d", c.T_d},
                     {"users", c.users.size()},
                     {"mu_T", dist(c.mu_T)},
                     {"mu_S", dist(c.mu_S)}});
  return {{"aggregation", "mean_of_per_day_scores"}, {"bin_rule", "left_open_right_closed"}, {"cells", cells}};
}

}  // namespace visitscope::quality
