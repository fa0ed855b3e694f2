#include "visitscope/classify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "visitscope/csv.hpp"

namespace visitscope::classify {

namespace {

constexpr const char* kCodes[kLabelCount] = {"G1", "G2", "G3", "G4", "G5", "G6", "G7"};
constexpr const char* kNames[kLabelCount] = {"short-exploratory", "long-rare-exploration", "routine-change",
                                             "casual",            "important",             "routine",
                                             "anchored"};

}  // namespace

const char* code(Label l) { return kCodes[index_of(l)]; }
const char* display_name(Label l) { return kNames[index_of(l)]; }

std::optional<Label> label_from_code(std::string_view s) {
  for (std::size_t i = 0; i < kLabelCount; ++i)
    if (s == kCodes[i]) return label_at(i);
  return std::nullopt;
}

void LabelingRules::validate() const {
  for (const auto& a : anchors)
    if (a.frequency < 0 || a.frequency > 100 || a.dwell < 0 || a.dwell > 100)
      throw std::invalid_argument("labeling anchors must lie in [0, 100]^2");
  if (!(override_hours > 0.0)) throw std::invalid_argument("override_hours must be > 0");
}

double empirical_percentile_sorted(std::span<const double> sorted, double x) {
  if (sorted.empty()) return 0.0;
  const auto le = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
  return 100.0 * static_cast<double>(le) / static_cast<double>(sorted.size());
}

double empirical_percentile(std::span<const double> values, double x) {
  std::size_t le = 0;
  for (double v : values) le += v <= x;
  return values.empty() ? 0.0 : 100.0 * static_cast<double>(le) / static_cast<double>(values.size());
}

std::array<std::size_t, kLabelCount> optimal_assignment(
    const std::array<std::array<double, kLabelCount>, kLabelCount>& cost, double* total) {
  // 7! = 5040 permutations: exhaustive search is exact and cheap. perm[l] is
  // the component given label l; std::next_permutation walks them in
  // lexicographic order, so the first optimum found is the tie-break winner.
  std::array<std::size_t, kLabelCount> perm;
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::array<std::size_t, kLabelCount> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t l = 0; l < kLabelCount; ++l) c += cost[perm[l]][l];
    if (std::isinf(best_cost) || c < best_cost - 1e-9 * std::max(1.0, std::abs(best_cost))) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (total) *total = best_cost;
  return best;
}

ComponentLabeling assign_labels(const gmm::GmmModel& model, visits::Transform transform,
                                std::span<const VisitFeature> features, const LabelingRules& rules) {
  rules.validate();
  if (model.k != kLabelCount)
    throw std::invalid_argument("labeling needs a 7-component model (got k=" + std::to_string(model.k) +
                                "); set model.k to 7");
  if (model.d != 2) throw std::invalid_argument("labeling needs 2-D (frequency, dwell) features");

  std::vector<double> freq, dwell;
  for (const auto& f : features) {
    freq.push_back(static_cast<double>(f.n_days));
    dwell.push_back(f.mean_dwell_s / 3600.0);
  }
  std::sort(freq.begin(), freq.end());
  std::sort(dwell.begin(), dwell.end());

  ComponentLabeling out;
  std::array<std::array<double, kLabelCount>, kLabelCount> cost{};
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    const double f = visits::invert_transform(model.means(c, 0), transform);
    const double d = visits::invert_transform(model.means(c, 1), transform);
    out.centroid_raw.push_back({f, d});
    const PercentilePoint pp{empirical_percentile_sorted(freq, f), empirical_percentile_sorted(dwell, d)};
    out.centroid_pct.push_back(pp);
    for (std::size_t l = 0; l < kLabelCount; ++l)
      cost[c][l] = std::hypot(pp.frequency - rules.anchors[l].frequency, pp.dwell - rules.anchors[l].dwell);
  }
  const auto perm = optimal_assignment(cost, &out.cost);
  out.component_label.assign(kLabelCount, Label::G1);
  for (std::size_t l = 0; l < kLabelCount; ++l) out.component_label[perm[l]] = label_at(l);
  return out;
}

std::vector<LabeledFeature> classify_features(std::span<const VisitFeature> features, const gmm::GmmModel& model,
                                              visits::Transform transform, const ComponentLabeling& labeling,
                                              const LabelingRules& rules) {
  std::vector<LabeledFeature> out;
  if (features.empty()) return out;
  const auto fm = visits::feature_matrix(features, transform);
  const auto pred = gmm::predict(model, fm.values);
  out.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    LabeledFeature lf;
    lf.feature = features[i];
    lf.component = pred.labels[i];
    lf.label = labeling.component_label.at(lf.component);
    if (rules.dwell_override && features[i].mean_dwell_s / 3600.0 > rules.override_hours && lf.label != Label::G3) {
      lf.label = Label::G3;
      lf.overridden = true;
    }
    out.push_back(std::move(lf));
  }
  return out;
}

std::array<std::size_t, kLabelCount> label_counts(std::span<const LabeledFeature> labeled) {
  std::array<std::size_t, kLabelCount> c{};
  for (const auto& l : labeled) ++c[index_of(l.label)];
  return c;
}

void write_labeled_csv(std::ostream& out, std::span<const LabeledFeature> labeled) {
  out << "user_id,poi_id,n_days,mean_dwell_h,component,label\n";
  for (const auto& l : labeled)
    out << csv::escape(l.feature.user_id) << ',' << csv::escape(l.feature.poi_id) << ',' << l.feature.n_days << ','
        << csv::exact(l.feature.mean_dwell_s / 3600.0) << ',' << l.component << ',' << code(l.label) << '\n';
}

std::vector<LabeledFeature> read_labeled_csv(std::istream& in) {
  std::vector<LabeledFeature> out;
  std::string line;
  std::vector<std::string> f;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    if (!csv::split_record(line, ',', f) || f.size() != 6) throw std::runtime_error("malformed labeled row: " + line);
    LabeledFeature lf;
    lf.feature.user_id = f[0];
    lf.feature.poi_id = f[1];
    std::from_chars(f[2].data(), f[2].data() + f[2].size(), lf.feature.n_days);
    double h = 0.0;
    std::from_chars(f[3].data(), f[3].data() + f[3].size(), h);
    lf.feature.mean_dwell_s = h * 3600.0;
    std::from_chars(f[4].data(), f[4].data() + f[4].size(), lf.component);
    const auto l = label_from_code(f[5]);
    if (!l) throw std::runtime_error("unknown label " + f[5]);
    lf.label = *l;
    out.push_back(std::move(lf));
  }
  return out;
}

nlohmann::json to_json(const ComponentLabeling& labeling, const LabelingRules& rules) {
  nlohmann::json comps = nlohmann::json::array();
  for (std::size_t c = 0; c < labeling.component_label.size(); ++c) {
    const Label l = labeling.component_label[c];
    comps.push_back({{"component", c},
                     {"label", code(l)},
                     {"name", display_name(l)},
                     {"centroid_n_days", labeling.centroid_raw[c][0]},
                     {"centroid_mean_dwell_h", labeling.centroid_raw[c][1]},
                     {"frequency_pct", labeling.centroid_pct[c].frequency},
                     {"dwell_pct", labeling.centroid_pct[c].dwell}});
  }
  nlohmann::json anchors = nlohmann::json::object();
  for (std::size_t l = 0; l < kLabelCount; ++l)
    anchors[kCodes[l]] = {rules.anchors[l].frequency, rules.anchors[l].dwell};
  return {{"components", comps},
          {"cost", labeling.cost},
          {"anchors", anchors},
          {"dwell_override", rules.dwell_override},
          {"override_hours", rules.override_hours}};
}

}  // namespace visitscope::classify
