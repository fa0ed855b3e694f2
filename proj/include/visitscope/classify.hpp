#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visitscope/gmm.hpp"
#include "visitscope/types.hpp"
#include "visitscope/visits.hpp"

namespace visitscope::classify {

/// The seven visit classes, from short exploratory (G1) to anchored (G7).
enum class Label { G1 = 0, G2, G3, G4, G5, G6, G7 };

inline constexpr std::size_t kLabelCount = 7;

const char* code(Label l);          // "G1"
const char* display_name(Label l);  // "short-exploratory"
std::optional<Label> label_from_code(std::string_view s);
inline Label label_at(std::size_t i) { return static_cast<Label>(i); }
inline std::size_t index_of(Label l) { return static_cast<std::size_t>(l); }

struct PercentilePoint {
  double frequency = 0.0;  // percentile of n_days, 0..100
  double dwell = 0.0;      // percentile of mean dwell, 0..100
};

struct LabelingRules {
  std::array<PercentilePoint, kLabelCount> anchors{{
      {10, 10},  // G1 short exploratory
      {10, 75},  // G2 long, rare exploration
      {50, 95},  // G3 routine change
      {30, 10},  // G4 casual
      {30, 60},  // G5 important
      {70, 50},  // G6 routine
      {90, 85},  // G7 anchored
  }};
  bool dwell_override = true;
  double override_hours = 24.0;  // mean dwell above this is always G3

  void validate() const;
};

/// 100 * |{v in values : v <= x}| / |values|; 0 for an empty population.
double empirical_percentile(std::span<const double> values, double x);

/// Same, over a population already sorted ascending.
double empirical_percentile_sorted(std::span<const double> sorted, double x);

struct ComponentLabeling {
  std::vector<Label> component_label;         // index = component
  std::vector<PercentilePoint> centroid_pct;  // per component
  std::vector<std::array<double, 2>> centroid_raw;  // (n_days, mean dwell h)
  double cost = 0.0;                           // total Euclidean distance
};

/// Cost-minimizing bijection between the 7 components and the 7 anchors.
/// `cost[c][l]` is the cost of giving component c label l. Among optimal
/// assignments the lexicographically first by label order wins (G1 takes the
/// lowest component index it can, then G2, ...).
std::array<std::size_t, kLabelCount> optimal_assignment(
    const std::array<std::array<double, kLabelCount>, kLabelCount>& cost, double* total = nullptr);

/// Maps each component to a label by percentile position of its centroid
/// in the raw (untransformed) feature distribution. Requires k == 7.
ComponentLabeling assign_labels(const gmm::GmmModel& model, visits::Transform transform,
                                std::span<const VisitFeature> features, const LabelingRules& rules);

struct LabeledFeature {
  VisitFeature feature;
  std::size_t component = 0;
  Label label = Label::G1;
  bool overridden = false;
};

std::vector<LabeledFeature> classify_features(std::span<const VisitFeature> features, const gmm::GmmModel& model,
                                              visits::Transform transform, const ComponentLabeling& labeling,
                                              const LabelingRules& rules);

std::array<std::size_t, kLabelCount> label_counts(std::span<const LabeledFeature> labeled);

void write_labeled_csv(std::ostream& out, std::span<const LabeledFeature> labeled);
std::vector<LabeledFeature> read_labeled_csv(std::istream& in);
nlohmann::json to_json(const ComponentLabeling& labeling, const LabelingRules& rules);

}  // namespace visitscope::classify
