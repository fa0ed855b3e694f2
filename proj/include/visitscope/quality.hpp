#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visitscope/types.hpp"

namespace visitscope::quality {

/// Observation unit P, window size tau, observation period T and the speed
/// ceiling used by the spatial check. Durations are whole seconds.
struct CompletenessParams {
  std::int64_t period_s = 24 * kSecondsPerHour;
  std::int64_t tau_s = kSecondsPerHour;
  int period_count = 15;  // T, in units of P (days when P = 24 h)
  double max_speed_kmh = 150.0;

  static CompletenessParams from_hours(double tau_h, int T_days, double P_h = 24.0,
                                       double max_speed_kmh = 150.0);

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  /// Bins per observation unit; the last bin is truncated when tau does not divide P.
  std::int64_t bins_per_period() const { return (period_s + tau_s - 1) / tau_s; }
  double max_speed_mps() const { return max_speed_kmh / 3.6; }
  std::int64_t span_s() const { return period_s * period_count; }
};

struct TemporalCompleteness {
  std::vector<double> per_period;  // one score per observation unit, length T
  double mu_T = 0.0;
};

/// Bins are left-open, right-closed: bin i of unit j covers
/// ]start + j*P + (i-1)*tau, start + j*P + i*tau]. Records outside
/// ]start, start + T*P] are ignored.
TemporalCompleteness temporal_completeness(const MobilityTrace& trace, const CompletenessParams& params,
                                           Timestamp window_start);

struct SpatialCompleteness {
  double mu_S = 1.0;
  std::size_t pairs = 0;    // pairs that entered the mean
  std::size_t invalid = 0;  // pairs with g = 0
  std::size_t skipped = 0;  // zero-time, zero-distance pairs
  bool no_motion = false;   // fewer than one usable pair; mu_S defaulted to 1
};

SpatialCompleteness spatial_completeness(const MobilityTrace& trace, const CompletenessParams& params);

/// Records with t in ]begin, end].
MobilityTrace slice_window(const MobilityTrace& trace, Timestamp begin, Timestamp end);

/// Where each user's T-period window begins.
struct WindowAnchor {
  enum class Mode { FirstDay, Fixed } mode = Mode::FirstDay;
  Timestamp fixed_start = 0;

  Timestamp start_for(const MobilityTrace& trace) const;
};

struct UserScore {
  UserId user_id;
  double mu_T = 0.0;
  double mu_S = 1.0;
  Timestamp window_start = 0;
};

struct Distribution {
  std::vector<std::size_t> histogram;  // equal-width bins over [0, 1], last bin closed
  std::vector<std::pair<double, double>> quantiles;  // (q, value)
};

Distribution describe(std::span<const double> values, std::size_t bins = 20);

struct GridCell {
  double tau_h = 1.0;
  int T_d = 15;
  std::vector<UserScore> users;  // sorted by user id
  Distribution mu_T;
  Distribution mu_S;
};

struct GridAssessment {
  std::vector<GridCell> cells;  // tau-major, then T, in the order given
};

UserScore score_user(const MobilityTrace& trace, const CompletenessParams& params, const WindowAnchor& anchor);

GridAssessment grid_assessment(const TraceMap& traces, std::span<const double> tau_set_h,
                               std::span<const int> T_set_d, const CompletenessParams& base,
                               const WindowAnchor& anchor, unsigned threads = 1);

struct CohortCriteria {
  double mu_T_min = 1.0;
  double mu_S_min = 0.99;
};

/// Users meeting both thresholds, sorted. An empty result is not an error.
std::vector<UserId> select_cohort(std::span<const UserScore> scores, const CohortCriteria& criteria);

void write_reports_csv(std::ostream& out, const GridAssessment& grid);
nlohmann::json histograms_json(const GridAssessment& grid);

}  // namespace visitscope::quality
