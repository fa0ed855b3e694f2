// Acceptance suite: one PASS/FAIL/UNVERIFIED line per criterion.
//
//   acceptance            run every criterion
//   acceptance 3 7        run only the listed criteria
//
// Exits non-zero when a criterion fails that is not in kKnownUnattainable.
// UNVERIFIED (external data absent) does not count as a failure.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "visitscope/classify.hpp"
#include "visitscope/gmm.hpp"
#include "visitscope/ingest.hpp"
#include "visitscope/patterns.hpp"
#include "visitscope/pipeline.hpp"
#include "visitscope/quality.hpp"
#include "visitscope/rng.hpp"
#include "visitscope/simd/kernels.hpp"
#include "visitscope/synth.hpp"
#include "visitscope/time.hpp"

namespace fs = std::filesystem;
using namespace visitscope;

namespace {

// Criterion 3 asks for 8/9 from a 10-record trace with one substituted
// teleport and two invalidated pairs; 9 pairs with 2 invalid is 7/9. The
// check stays as written and is expected to fail (see README).
const std::set<int> kKnownUnattainable{3};

// Pinned tolerances.
constexpr double kOracleRuntimeS = 10.0;      // criterion 1
constexpr double kEmSlack = 1e-8;             // criterion 4, relative
constexpr double kMleTol = 1e-9;              // criterion 4, relative
constexpr int kBicSeeds = 20, kBicNeeded = 19;  // criterion 5
constexpr double kSweepBudgetS = 300.0;       // criterion 5
constexpr double kTaxonomyAccuracy = 0.99;    // criterion 7
constexpr double kMotifAccuracy = 0.95;       // criterion 8
constexpr double kMotifSigma = 0.01;          // criterion 8

enum class Status { Pass, Fail, Unverified };

struct Outcome {
  Status status = Status::Fail;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr Timestamp kDay0 = 1709510400;  // 2024-03-04 00:00, a Monday

// 1, 2: completeness against the brute-force oracles ---------------------------

struct FuzzCase {
  MobilityTrace trace;
  int T;
};

std::vector<FuzzCase> fuzz_cases() {
  std::mt19937_64 g(20240304);
  std::vector<FuzzCase> out;
  for (int i = 0; i < 1000; ++i) {
    const int T = 1 + static_cast<int>(g() % 5);
    out.push_back({oracle::fuzz_trace(g, kDay0, T), T});
  }
  return out;
}

Outcome oracle_equivalence() {
  const auto cases = fuzz_cases();
  const double taus[] = {0.5, 1, 2, 3, 4, 6, 7};
  std::size_t mismatches = 0, checks = 0;
  double lib_s = 0.0;
  std::mt19937_64 g(7);
  for (const auto& c : cases) {
    const auto p = quality::CompletenessParams::from_hours(taus[g() % 7], c.T);
    const auto t0 = Clock::now();
    const double mu_T = quality::temporal_completeness(c.trace, p, kDay0).mu_T;
    const auto sliced = quality::slice_window(c.trace, kDay0, kDay0 + p.span_s());
    const double mu_S = quality::spatial_completeness(sliced, p).mu_S;
    lib_s += seconds_since(t0);
    mismatches += mu_T != oracle::brute_mu_T(c.trace, p.tau_s, p.period_s, c.T, kDay0);
    mismatches += mu_S != oracle::brute_mu_S(sliced, p.period_s, p.max_speed_kmh);
    checks += 2;
  }
  const bool ok = mismatches == 0 && lib_s < kOracleRuntimeS;
  return {ok ? Status::Pass : Status::Fail,
          fmt("%zu/%zu exact matches on %zu traces, library time %.3f s (limit %.0f s)", checks - mismatches, checks,
              cases.size(), lib_s, kOracleRuntimeS)};
}

Outcome window_nesting() {
  const auto cases = fuzz_cases();
  std::size_t violations = 0;
  for (const auto& c : cases) {
    auto mu = [&](double tau) {
      return quality::temporal_completeness(c.trace, quality::CompletenessParams::from_hours(tau, c.T), kDay0).mu_T;
    };
    const double m1 = mu(1), m4 = mu(4), m6 = mu(6);
    violations += !(m1 <= m4) + !(m1 <= m6);
  }
  return {violations == 0 ? Status::Pass : Status::Fail,
          fmt("mu_T(1h) <= mu_T(4h) and <= mu_T(6h): %zu violations over %zu traces", violations, cases.size())};
}

// 3: speed filter ---------------------------------------------------------------

MobilityTrace walk(std::size_t n) {
  MobilityTrace tr{"walker", {}};
  // 5 min apart, about 110 m per step: 1.3 km/h
  for (std::size_t i = 0; i < n; ++i) tr.records.push_back({"walker", 1.30 + 0.001 * i, 103.80, kDay0 + 60 + 300 * static_cast<Timestamp>(i)});
  return tr;
}

Outcome speed_filter() {
  const auto p = quality::CompletenessParams::from_hours(1, 1, 24, 150);
  // 25 km in 5 min is 300 km/h
  const double jump_deg = 25000.0 / 6371000.0 * 180.0 / std::numbers::pi;
  auto mid = walk(10);
  mid.records[4].lon += jump_deg;
  const auto s = quality::spatial_completeness(mid, p);
  const double v_in = oracle::chord_distance(mid.records[3].lat, mid.records[3].lon, mid.records[4].lat,
                                             mid.records[4].lon) / 300.0 * 3.6;
  auto tail = walk(10);
  tail.records[9].lon += jump_deg;
  const auto t = quality::spatial_completeness(tail, p);
  const bool ok = s.pairs == 9 && s.invalid == 2 && s.mu_S == 8.0 / 9.0;
  return {ok ? Status::Pass : Status::Fail,
          fmt("substituted record 5 at %.0f km/h: mu_S = %zu/%zu = %.6f with %zu invalid pairs; expected 8/9 = %.6f "
              "with 2 invalid (unattainable together: 9 pairs minus 2 is 7/9). A teleport in the last record gives "
              "%zu/%zu = %.6f with %zu invalid",
              v_in, s.pairs - s.invalid, s.pairs, s.mu_S, s.invalid, 8.0 / 9.0, t.pairs - t.invalid, t.pairs, t.mu_S,
              t.invalid)};
}

// 4: EM correctness -------------------------------------------------------------

Matrix planted_blobs(std::size_t n, std::size_t comps, std::size_t d, double sep, std::uint64_t seed) {
  Rng g(seed);
  std::vector<std::vector<double>> centers(comps, std::vector<double>(d));
  for (std::size_t c = 0; c < comps; ++c)
    for (std::size_t a = 0; a < d; ++a) centers[c][a] = sep * (a == c % d ? 1.0 : 0.0) * static_cast<double>(1 + c / d);
  Matrix X;
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centers[i % comps];
    for (std::size_t a = 0; a < d; ++a) row[a] = c[a] + g.normal() * (1.0 + 0.3 * a);
    X.push_row(row);
  }
  return X;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

Outcome em_correctness() {
  std::size_t fits = 0, decreases = 0, reseeded = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t d = 1 + s % 3, k = 2 + s % 5;
    const auto X = planted_blobs(400, 3, d, 2.5, 1000 + s);
    gmm::GmmParams p;
    p.k = k;
    p.kind = gmm::kAllKinds[s % 4];
    p.seed = s;
    p.n_init = 1;
    const auto m = gmm::fit_gmm(X, p);
    ++fits;
    reseeded += m.reseeded;
    const auto& h = m.loglik_history;
    for (std::size_t i = 1; i < h.size(); ++i) {
      if (std::find(m.reseed_steps.begin(), m.reseed_steps.end(), i) != m.reseed_steps.end()) continue;
      const double drop = (h[i - 1] - h[i]) / std::abs(h[i - 1]);
      worst = std::max(worst, drop);
      decreases += drop > kEmSlack;
    }
  }

  // k = 1 against the sample mean and covariance, for every kind
  const auto X = planted_blobs(1500, 2, 3, 3.0, 77);
  const std::size_t n = X.rows(), d = X.cols();
  std::vector<double> mean(d, 0.0), S(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) mean[a] += X(i, a) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) S[a * d + b] += (X(i, a) - mean[a]) * (X(i, b) - mean[b]) / static_cast<double>(n);
  double mle_err = 0.0;
  const double reg = 1e-6;
  for (auto kind : gmm::kAllKinds) {
    std::vector<double> cov(d * d, 0.0);
    double tr = 0.0;
    for (std::size_t a = 0; a < d; ++a) tr += S[a * d + a];
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) {
        switch (kind) {
          case gmm::CovKind::Spherical: cov[a * d + b] = a == b ? tr / d + reg : 0.0; break;
          case gmm::CovKind::Diagonal: cov[a * d + b] = a == b ? S[a * d + a] + reg : 0.0; break;
          default: cov[a * d + b] = S[a * d + b] + (a == b ? reg : 0.0);
        }
      }
    gmm::GmmParams p;
    p.k = 1;
    p.kind = kind;
    p.reg_covar = reg;
    const auto m = gmm::fit_gmm(X, p);
    for (std::size_t a = 0; a < d; ++a) mle_err = std::max(mle_err, rel_err(m.means(0, a), mean[a]));
    const auto c = m.covariance(0);
    double scale = 0.0;
    for (double v : cov) scale = std::max(scale, std::abs(v));
    for (std::size_t q = 0; q < d * d; ++q) mle_err = std::max(mle_err, std::abs(c[q] - cov[q]) / scale);
    gmm::GmmModel ref = m;
    ref.means = Matrix(1, d);
    for (std::size_t a = 0; a < d; ++a) ref.means(0, a) = mean[a];
    ref.kind = gmm::CovKind::Full;
    ref.covariances = cov;
    mle_err = std::max(mle_err, rel_err(m.loglik, oracle::naive_loglik(ref, X)));
  }
  const bool ok = decreases == 0 && mle_err <= kMleTol;
  return {ok ? Status::Pass : Status::Fail,
          fmt("%zu fits, %zu decreases beyond %.0e (largest relative drop %.2e, %zu fits re-seeded); k=1 MLE max "
              "relative error %.2e (limit %.0e)",
              fits, decreases, kEmSlack, worst, reseeded, mle_err, kMleTol)};
}

// 5: model selection ------------------------------------------------------------

Matrix three_clusters(std::size_t n, std::uint64_t seed) {
  // unit-variance components whose centres are 6 sigma apart
  Rng g(seed);
  const double c[3][2] = {{0, 0}, {6, 0}, {3, 6 * std::sqrt(3.0) / 2}};
  Matrix X;
  for (std::size_t i = 0; i < n; ++i) {
    const double row[2] = {c[i % 3][0] + g.normal(), c[i % 3][1] + g.normal()};
    X.push_row(row);
  }
  return X;
}

Matrix sweep_rows(std::size_t n, std::uint64_t seed) {
  // stand-in for (n_days, mean dwell) features after log1p: 7 blobs of unequal size
  Rng g(seed);
  const double c[7][2] = {{0.7, 0.5}, {0.7, 2.3}, {1.6, 3.4}, {1.2, 0.4}, {1.2, 1.6}, {2.2, 1.2}, {3.0, 2.6}};
  const double w[7] = {0.25, 0.1, 0.05, 0.2, 0.15, 0.15, 0.1};
  Matrix X;
  for (std::size_t i = 0; i < n; ++i) {
    double u = g.uniform(), acc = 0.0;
    std::size_t j = 0;
    while (j < 6 && u >= (acc += w[j])) ++j;
    const double row[2] = {c[j][0] + 0.2 * g.normal(), c[j][1] + 0.3 * g.normal()};
    X.push_row(row);
  }
  return X;
}

Outcome model_selection() {
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  int hits = 0;
  std::map<std::size_t, int> picks;
  for (int s = 0; s < kBicSeeds; ++s) {
    const auto X = three_clusters(3000, 500 + s);
    gmm::SweepParams sp;
    sp.k_max = 8;
    sp.kinds = {gmm::CovKind::Full};
    sp.base.seed = static_cast<std::uint64_t>(s);
    sp.selected_k = 3;
    sp.selected_kind = gmm::CovKind::Full;
    sp.threads = threads;
    const auto r = gmm::sweep(X, sp);
    const auto bic = r.bic_series(gmm::CovKind::Full);
    std::size_t best = 0;
    for (std::size_t i = 1; i < bic.size(); ++i)
      if (bic[i] < bic[best]) best = i;
    ++picks[best + 1];
    hits += best + 1 == 3;
  }
  std::string dist;
  for (auto [k, c] : picks) dist += fmt("%s k=%zu:%d", dist.empty() ? "" : ",", k, c);

  const auto X = sweep_rows(50000, 9);
  gmm::SweepParams sp;
  sp.k_max = 21;
  sp.base.seed = 42;
  sp.threads = threads;
  const auto t0 = Clock::now();
  const auto r = gmm::sweep(X, sp);
  const double elapsed = seconds_since(t0);
  std::size_t ok_cells = 0;
  for (const auto& c : r.cells) ok_cells += c.ok;
  const bool ok = hits >= kBicNeeded && r.cells.size() == 84 && ok_cells == 84 && elapsed < kSweepBudgetS;
  return {ok ? Status::Pass : Status::Fail,
          fmt("BIC picks k=3 (full) in %d/%d seeds (need %d; picks %s); 21x4 sweep on 50000 rows: %zu/%zu cells in "
              "%.1f s on %u thread(s), %s backend (limit %.0f s)",
              hits, kBicSeeds, kBicNeeded, dist.c_str(), ok_cells, r.cells.size(), elapsed, threads,
              simd::to_string(simd::kernels().backend), kSweepBudgetS)};
}

// 6: parameter counts -----------------------------------------------------------

Outcome parameter_counts() {
  // counted by hand: means + weights + covariance entries
  struct Row {
    std::size_t k, d, sph, diag, tied, full;
  };
  const Row table[] = {
      {1, 1, 2, 2, 2, 2},     {1, 2, 3, 4, 5, 5},     {1, 3, 4, 6, 9, 9},
      {2, 1, 5, 5, 4, 5},     {2, 2, 7, 9, 8, 11},    {2, 3, 9, 13, 13, 19},
      {7, 1, 20, 20, 14, 20}, {7, 2, 27, 34, 23, 41}, {7, 3, 34, 48, 33, 69},
  };
  std::size_t checked = 0, wrong = 0;
  for (const auto& r : table) {
    const std::size_t want[] = {r.sph, r.diag, r.tied, r.full};
    for (std::size_t q = 0; q < 4; ++q) {
      const auto ic = gmm::information_criteria(-1234.5, 100, r.k, r.d, gmm::kAllKinds[q]);
      const double p = static_cast<double>(want[q]);
      wrong += ic.params != want[q];
      wrong += std::abs(ic.bic - (p * std::log(100.0) + 2469.0)) > 1e-9;
      wrong += std::abs(ic.aic - (2.0 * p + 2469.0)) > 1e-9;
      checked += 3;
    }
  }
  return {wrong == 0 ? Status::Pass : Status::Fail,
          fmt("%zu/%zu counts and BIC/AIC values match over 4 kinds x k in {1,2,7} x d in {1,2,3}", checked - wrong,
              checked)};
}

// 7: taxonomy recovery ----------------------------------------------------------

Outcome taxonomy_recovery() {
  // Raw (frequency, dwell) positions whose percentile layout mirrors the
  // prototype geometry; n_days = 10 * frequency.
  struct Plant {
    classify::Label label;
    double f, dwell_h, weight;
  };
  const Plant plants[] = {{classify::Label::G1, 1, 1, 0.1}, {classify::Label::G2, 1, 7, 0.1},
                          {classify::Label::G3, 5, 9, 0.2}, {classify::Label::G4, 3, 1, 0.1},
                          {classify::Label::G5, 3, 5, 0.1}, {classify::Label::G6, 7, 3, 0.2},
                          {classify::Label::G7, 9, 8, 0.2}};
  const double sigma = 0.15;
  Rng g(31);
  std::vector<VisitFeature> feats;
  std::vector<classify::Label> truth;
  const std::size_t n = 3000;
  for (const auto& p : plants)
    for (std::size_t i = 0; i < static_cast<std::size_t>(p.weight * n); ++i) {
      const auto days = std::max<std::int64_t>(1, std::llround(10.0 * (p.f + sigma * g.normal())));
      const double dwell = std::max(0.05, p.dwell_h + sigma * g.normal()) * 3600.0;
      feats.push_back({"u" + std::to_string(feats.size() % 97), "p" + std::to_string(feats.size()), days, dwell,
                       dwell * static_cast<double>(days), days});
      truth.push_back(p.label);
    }
  const auto fm = visits::feature_matrix(feats, visits::Transform::None);
  gmm::GmmParams gp;
  gp.k = 7;
  gp.kind = gmm::CovKind::Tied;
  gp.seed = 42;
  const auto model = gmm::fit_gmm(fm.values, gp);
  const classify::LabelingRules rules;
  const auto lab = classify::assign_labels(model, visits::Transform::None, feats, rules);
  const auto out = classify::classify_features(feats, model, visits::Transform::None, lab, rules);

  // Identity mapping: the component fitted to each planted cluster carries
  // that cluster's label.
  bool identity = true;
  for (std::size_t c = 0; c < 7; ++c) {
    std::array<std::size_t, 7> votes{};
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i].component == c) ++votes[classify::index_of(truth[i])];
    const auto major = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    identity &= lab.component_label[c] == classify::label_at(major);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < out.size(); ++i) correct += out[i].label == truth[i];
  const double acc = static_cast<double>(correct) / static_cast<double>(out.size());
  std::string pct;
  for (std::size_t c = 0; c < 7; ++c)
    pct += fmt(" %s(%.0f,%.0f)", classify::code(lab.component_label[c]), lab.centroid_pct[c].frequency,
               lab.centroid_pct[c].dwell);
  return {identity && acc >= kTaxonomyAccuracy ? Status::Pass : Status::Fail,
          fmt("identity mapping %s, per-point accuracy %.4f (need %.2f) on %zu features; assignment cost %.1f; "
              "centroid percentiles%s",
              identity ? "yes" : "no", acc, kTaxonomyAccuracy, out.size(), lab.cost, pct.c_str())};
}

// 8: motif recovery -------------------------------------------------------------

Outcome motif_recovery() {
  using patterns::Square;
  // three behaviours: home-anchored loops, commuting, exploring
  std::array<Square, 3> protos{};
  for (std::size_t r = 0; r < 7; ++r) {
    protos[0][r][6] = 0.8;
    protos[0][r][r == 6 ? 3 : r] += 0.2;
    protos[1][r][r == 5 ? 6 : 5] = 0.6;
    protos[1][r][4] += 0.4;
    for (std::size_t q = 0; q < 3; ++q) protos[2][r][q] = 0.3;
    protos[2][r][1 + r % 6] += 0.1;
  }
  const std::size_t per_group = 10;
  std::size_t correct = 0, total = 0;
  int worst_seed = -1;
  double worst = 2.0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng g(900 + seed);
    std::vector<patterns::TransitionMatrix> ms;
    std::vector<std::size_t> truth;
    for (std::size_t u = 0; u < 3 * per_group; ++u) {
      patterns::TransitionMatrix m;
      m.user_id = fmt("user%02zu", u);
      const auto& base = protos[u % 3];
      for (std::size_t r = 0; r < 7; ++r) {
        double s = 0.0;
        for (std::size_t q = 0; q < 7; ++q) {
          m.probs[r][q] = std::max(0.0, base[r][q] + kMotifSigma * g.normal());
          s += m.probs[r][q];
        }
        for (std::size_t q = 0; q < 7; ++q) {
          m.probs[r][q] /= s;
          m.counts[r][q] = std::llround(100.0 * m.probs[r][q]);
        }
      }
      ms.push_back(m);
      truth.push_back(u % 3);
    }
    const auto r = patterns::cluster_motifs(ms, 3, static_cast<std::uint64_t>(seed));
    // best agreement over the 3! relabelings
    std::array<std::size_t, 3> perm{0, 1, 2};
    std::size_t best = 0;
    do {
      std::size_t hit = 0;
      for (std::size_t i = 0; i < r.users.size(); ++i) hit += perm[r.cluster[i]] == truth[i];
      best = std::max(best, hit);
    } while (std::next_permutation(perm.begin(), perm.end()));
    correct += best;
    total += ms.size();
    const double a = static_cast<double>(best) / static_cast<double>(ms.size());
    if (a < worst) {
      worst = a;
      worst_seed = seed;
    }
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(total);
  return {acc >= kMotifAccuracy ? Status::Pass : Status::Fail,
          fmt("membership accuracy %.4f over 20 seeds x %zu users (need %.2f, sigma %.2f); worst seed %d at %.3f", acc,
              3 * per_group, kMotifAccuracy, kMotifSigma, worst_seed, worst)};
}

// 9, 10: end-to-end runs --------------------------------------------------------

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).generic_string();
    if (rel == "run_manifest.json") continue;
    m[rel] = pipeline::sha256_file(e.path());
  }
  return m;
}

const char* kArtifacts[] = {"ingest/manifest.json",         "quality/reports.csv",     "quality/cohort.json",
                            "visits/visits.csv",            "visits/features.csv",     "fit/sweep.csv",
                            "fit/model.json",               "fit/summary.json",        "classify/labeled_features.csv",
                            "classify/labeling.json",       "patterns/transitions.csv", "patterns/motifs.json",
                            "patterns/semantic.csv",        "patterns/temporal.csv",   "patterns/spatial_grid.csv",
                            "report/report.txt"};

void write_synthetic_corpus(const fs::path& dir, std::size_t users, int days, bool plt) {
  synth::PopulationParams p;
  p.users = users;
  p.days = days;
  p.pois = 120;
  p.seed = 2024;
  const auto pop = synth::generate_population(p);
  fs::create_directories(dir);
  if (plt) {
    synth::write_plt_corpus(dir / "Data", pop.records);
  } else {
    std::ofstream f(dir / "trajectories.csv", std::ios::binary);
    synth::write_trajectory_csv(f, pop.records);
  }
  std::ofstream f(dir / "pois.csv", std::ios::binary);
  ingest::write_pois_csv(f, pop.pois);
}

Outcome public_smoke() {
  const char* geolife = std::getenv("VISITSCOPE_GEOLIFE_DIR");
  const char* geolife_pois = std::getenv("VISITSCOPE_GEOLIFE_POIS");
  const auto dir = oracle::temp_dir("acceptance9");
  nlohmann::json cfg{{"output_dir", "out"},
                     {"seed", 42},
                     {"ingest", {{"format", "plt"}}},
                     {"quality", {{"tau_h", 1}, {"T_d", 15}}},
                     {"model", {{"k", 7}, {"cov_kind", "tied"}, {"k_max", 21}}}};
  const bool real = geolife && geolife_pois;
  if (real) {
    cfg["ingest"]["trajectories"] = geolife;
    cfg["ingest"]["pois"] = geolife_pois;
    // every user with data enters; the smoke run is about coverage, not cohort quality
    cfg["quality"]["mu_T_min"] = 0.0;
    cfg["quality"]["mu_S_min"] = 0.0;
  } else {
    write_synthetic_corpus(dir, 24, 16, true);
    cfg["ingest"]["trajectories"] = "Data";
    cfg["ingest"]["pois"] = "pois.csv";
  }
  std::string detail;
  bool ok = true;
  try {
    const auto config = parse_config(cfg, dir);
    const auto t0 = Clock::now();
    pipeline::run(config, pipeline::Stage::Report);
    const double elapsed = seconds_since(t0);
    const fs::path out = dir / "out";
    std::size_t present = 0;
    for (const char* a : kArtifacts) present += fs::exists(out / a);
    std::ifstream sweep_f(out / "fit/sweep.csv");
    std::string line;
    std::size_t rows = 0;
    std::getline(sweep_f, line);
    while (std::getline(sweep_f, line)) rows += !line.empty();
    std::ifstream cf(out / "quality/cohort.json");
    const auto cohort = nlohmann::json::parse(cf);
    std::ifstream sf(out / "fit/summary.json");
    const auto summary = nlohmann::json::parse(sf);
    std::string curve;
    for (const auto& c : summary["cells"])
      if (c["cov_kind"] == "tied")
        curve += c["bic"].is_number() ? fmt(" %.0f", c["bic"].get<double>()) : std::string(" -");
    const auto elbow = summary["bic_elbow"]["tied"]["k"];
    const std::size_t cohort_size = cohort["cohort_size"];
    ok = present == std::size(kArtifacts) && rows == 84 && cohort_size >= 20;
    detail = fmt("%s: cohort %zu users, %zu/%zu artifacts, sweep table %zu rows, %.1f s; tied BIC k=1..21:%s; "
                 "suggested elbow %s",
                 real ? "Geolife" : "Geolife not available (set VISITSCOPE_GEOLIFE_DIR and VISITSCOPE_GEOLIFE_POIS); "
                                    "ran the same pipeline on a synthetic 24-user PLT corpus",
                 cohort_size, present, std::size(kArtifacts), rows, elapsed, curve.c_str(),
                 elbow.is_null() ? "none" : std::to_string(elbow.get<std::size_t>()).c_str());
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("pipeline error: ") + e.what();
  }
  fs::remove_all(dir);
  if (!ok) return {Status::Fail, detail};
  return {real ? Status::Pass : Status::Unverified, detail};
}

Outcome determinism() {
  const auto dir = oracle::temp_dir("acceptance10");
  write_synthetic_corpus(dir, 6, 8, false);
  nlohmann::json cfg{{"seed", 7},
                     {"ingest", {{"trajectories", "trajectories.csv"}, {"pois", "pois.csv"}}},
                     {"quality", {{"T_d", 7}, {"T_grid", {1, 7}}}},
                     {"model", {{"k_max", 10}}}};
  std::string detail;
  bool ok = false;
  try {
    cfg["output_dir"] = "a";
    pipeline::run(parse_config(cfg, dir), pipeline::Stage::Report);
    cfg["output_dir"] = "b";
    pipeline::run(parse_config(cfg, dir), pipeline::Stage::Report);
    const auto a = tree(dir / "a"), b = tree(dir / "b");
    std::size_t differing = 0;
    for (const auto& [k, h] : a) differing += !b.count(k) || b.at(k) != h;
    differing += b.size() > a.size() ? b.size() - a.size() : 0;
    ok = differing == 0 && !a.empty();
    detail = fmt("%zu files compared, %zu differ (run_manifest.json timings excluded)", a.size(), differing);
  } catch (const std::exception& e) {
    detail = std::string("pipeline error: ") + e.what();
  }
  fs::remove_all(dir);
  return {ok ? Status::Pass : Status::Fail, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"completeness matches brute-force oracles", oracle_equivalence},
      {"temporal window nesting", window_nesting},
      {"speed filter on a 10-record teleport trace", speed_filter},
      {"EM monotonicity and k=1 MLE", em_correctness},
      {"BIC model selection and sweep runtime", model_selection},
      {"free parameter counts", parameter_counts},
      {"taxonomy recovery on planted clusters", taxonomy_recovery},
      {"motif recovery on planted groups", motif_recovery},
      {"end-to-end public-data smoke", public_smoke},
      {"byte-identical reruns", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "UNVERIFIED";
    const bool known = o.status == Status::Fail && kKnownUnattainable.count(id);
    std::printf("%-10s %2d  %s: %s%s\n", tag, id, criteria[i].first, o.detail.c_str(),
                known ? " [known unattainable]" : "");
    std::fflush(stdout);
    unexpected += o.status == Status::Fail && !known;
  }
  return unexpected == 0 ? 0 : 1;
}
