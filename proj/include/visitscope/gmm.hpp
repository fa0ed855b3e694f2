#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visitscope/matrix.hpp"

namespace visitscope::gmm {

class GmmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CovKind { Spherical, Diagonal, Tied, Full };

inline constexpr CovKind kAllKinds[] = {CovKind::Spherical, CovKind::Diagonal, CovKind::Tied, CovKind::Full};

const char* to_string(CovKind kind);
CovKind cov_kind_from_string(const std::string& s);

struct GmmParams {
  std::size_t k = 7;
  CovKind kind = CovKind::Tied;
  std::uint64_t seed = 0;
  std::size_t max_iter = 500;
  double tol = 1e-6;        // relative change of the total log-likelihood
  double reg_covar = 1e-6;  // added to every covariance diagonal
  unsigned n_init = 5;

  void validate() const;
};

struct GmmModel {
  CovKind kind = CovKind::Tied;
  std::size_t k = 0;
  std::size_t d = 0;
  std::vector<double> weights;
  Matrix means;  // k x d
  /// spherical: k values; diagonal: k*d; tied: d*d; full: k*d*d (row-major blocks)
  std::vector<double> covariances;

  double loglik = 0.0;  // total over the training rows
  std::size_t iterations = 0;
  bool converged = false;
  bool reseeded = false;    // a collapsed component was re-seeded
  bool degenerate = false;  // a component collapsed again after re-seeding
  std::uint64_t seed = 0;

  /// Log-likelihood after initialization and after every EM iteration.
  std::vector<double> loglik_history;
  /// Positions in loglik_history reached through a re-seed step.
  std::vector<std::size_t> reseed_steps;

  /// Full d x d covariance of component j (row-major).
  std::vector<double> covariance(std::size_t j) const;
};

/// EM from k-means++ seeding, best of `n_init` restarts by final log-likelihood.
/// Throws GmmError when rows <= k or the input has non-finite entries.
GmmModel fit_gmm(const Matrix& X, const GmmParams& params);

/// sum_i log sum_j w_j N(x_i | mu_j, Sigma_j)
double log_likelihood(const GmmModel& model, const Matrix& X);

/// Free parameters: k*d means + (k-1) weights + covariance entries.
std::size_t free_parameters(std::size_t k, std::size_t d, CovKind kind);

struct InformationCriteria {
  double bic = 0.0;
  double aic = 0.0;
  std::size_t params = 0;
};

InformationCriteria information_criteria(const GmmModel& model, const Matrix& X);
InformationCriteria information_criteria(double loglik, std::size_t n, std::size_t k, std::size_t d, CovKind kind);

struct Prediction {
  std::vector<std::size_t> labels;  // argmax, ties to the lower index
  Matrix responsibilities;           // n x k, rows sum to 1
};

Prediction predict(const GmmModel& model, const Matrix& X);

struct ElbowSuggestion {
  std::optional<std::size_t> k;  // none when the series has no curvature
  double curvature = 0.0;        // the largest second difference
};

/// `series[i]` is the score at k = i + 1. Picks the k with the largest
/// discrete second difference b(k-1) - 2 b(k) + b(k+1); ties go to the
/// smaller k. Non-finite neighbours exclude a k.
ElbowSuggestion suggest_elbow(std::span<const double> series);

struct SweepCell {
  std::size_t k = 0;
  CovKind kind = CovKind::Tied;
  bool ok = false;
  std::string error;
  double loglik = 0.0;
  double bic = 0.0;
  double aic = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

struct SweepParams {
  std::size_t k_max = 21;
  std::vector<CovKind> kinds{std::begin(kAllKinds), std::end(kAllKinds)};
  GmmParams base;  // seed, max_iter, tol, reg_covar, n_init
  std::size_t selected_k = 7;
  CovKind selected_kind = CovKind::Tied;
  unsigned threads = 1;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // kind-major in `kinds` order, then k ascending
  std::size_t selected_k = 7;
  CovKind selected_kind = CovKind::Tied;
  std::map<CovKind, ElbowSuggestion> bic_elbow;

  const SweepCell* find(std::size_t k, CovKind kind) const;
  /// BIC by k for one kind (NaN for failed cells).
  std::vector<double> bic_series(CovKind kind) const;
};

/// Seed of the (k, kind) cell derived from the base seed.
std::uint64_t cell_seed(std::uint64_t base, std::size_t k, CovKind kind);

/// Fits every (k, kind) cell; a failing cell is recorded and the sweep goes on.
SweepResult sweep(const Matrix& X, const SweepParams& params);

void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

nlohmann::json to_json(const GmmModel& model);
GmmModel model_from_json(const nlohmann::json& j);

}  // namespace visitscope::gmm
