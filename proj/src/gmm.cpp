#include "visitscope/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "visitscope/csv.hpp"
#include "visitscope/kmeans.hpp"
#include "visitscope/parallel.hpp"
#include "visitscope/rng.hpp"
#include "visitscope/simd/kernels.hpp"

namespace visitscope::gmm {

const char* to_string(CovKind kind) {
  switch (kind) {
    case CovKind::Spherical: return "spherical";
    case CovKind::Diagonal: return "diag";
    case CovKind::Tied: return "tied";
    case CovKind::Full: return "full";
  }
  return "?";
}

CovKind cov_kind_from_string(const std::string& s) {
  if (s == "spherical") return CovKind::Spherical;
  if (s == "diag" || s == "diagonal") return CovKind::Diagonal;
  if (s == "tied") return CovKind::Tied;
  if (s == "full") return CovKind::Full;
  throw std::invalid_argument("unknown covariance kind '" + s + "'");
}

void GmmParams::validate() const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (!(reg_covar > 0.0)) throw std::invalid_argument("reg_covar must be > 0");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

std::vector<double> GmmModel::covariance(std::size_t j) const {
  std::vector<double> c(d * d, 0.0);
  switch (kind) {
    case CovKind::Spherical:
      for (std::size_t a = 0; a < d; ++a) c[a * d + a] = covariances[j];
      break;
    case CovKind::Diagonal:
      for (std::size_t a = 0; a < d; ++a) c[a * d + a] = covariances[j * d + a];
      break;
    case CovKind::Tied:
      c.assign(covariances.begin(), covariances.end());
      break;
    case CovKind::Full:
      c.assign(covariances.begin() + static_cast<std::ptrdiff_t>(j * d * d),
               covariances.begin() + static_cast<std::ptrdiff_t>((j + 1) * d * d));
      break;
  }
  return c;
}

std::size_t free_parameters(std::size_t k, std::size_t d, CovKind kind) {
  std::size_t cov = 0;
  switch (kind) {
    case CovKind::Spherical: cov = k; break;
    case CovKind::Diagonal: cov = k * d; break;
    case CovKind::Tied: cov = d * (d + 1) / 2; break;
    case CovKind::Full: cov = k * d * (d + 1) / 2; break;
  }
  return k * d + (k - 1) + cov;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Lower-triangular whitening factor W with W Sigma W^T = I, and log|W|.
struct Whitener {
  std::vector<double> w;
  double log_det = 0.0;
};

Whitener whitener(const std::vector<double>& cov, std::size_t d) {
  // Cholesky: cov = L L^T.
  std::vector<double> L(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = cov[i * d + j];
      for (std::size_t m = 0; m < j; ++m) s -= L[i * d + m] * L[j * d + m];
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s))
          throw GmmError("covariance is not positive definite; increase reg_covar");
        L[i * d + i] = std::sqrt(s);
      } else {
        L[i * d + j] = s / L[j * d + j];
      }
    }
  }
  // W = L^{-1} by forward substitution, column by column.
  Whitener out;
  out.w.assign(d * d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t i = c; i < d; ++i) {
      double s = i == c ? 1.0 : 0.0;
      for (std::size_t m = c; m < i; ++m) s -= L[i * d + m] * out.w[m * d + c];
      out.w[i * d + c] = s / L[i * d + i];
    }
  }
  for (std::size_t i = 0; i < d; ++i) out.log_det -= std::log(L[i * d + i]);
  return out;
}

std::vector<Whitener> whiteners(const GmmModel& m) {
  std::vector<Whitener> out;
  out.reserve(m.k);
  if (m.kind == CovKind::Tied) {
    const Whitener w = whitener(m.covariances, m.d);
    out.assign(m.k, w);
    return out;
  }
  for (std::size_t j = 0; j < m.k; ++j) out.push_back(whitener(m.covariance(j), m.d));
  return out;
}

void check_input(const Matrix& X) {
  if (X.rows() == 0 || X.cols() == 0) throw GmmError("empty feature matrix");
  for (double v : X.data())
    if (!std::isfinite(v)) throw GmmError("feature matrix has non-finite entries");
}

/// Fills `resp` (k x n, component-major) with responsibilities and returns
/// the total log-likelihood.
double e_step(const ColumnStore& X, const GmmModel& m, std::vector<double>& resp, std::vector<double>& lse) {
  const std::size_t n = X.rows(), d = X.cols(), k = m.k;
  const auto& kern = simd::kernels();
  const auto wh = whiteners(m);
  resp.resize(k * n);
  lse.resize(n);
  for (std::size_t j = 0; j < k; ++j) {
    double* row = resp.data() + j * n;
    kern.mahalanobis_sq(X.cols_ptr(), d, n, m.means.row(j).data(), wh[j].w.data(), row);
    const double lw = m.weights[j] > 0.0 ? std::log(m.weights[j]) : -std::numeric_limits<double>::infinity();
    const double c = lw - 0.5 * static_cast<double>(d) * kLog2Pi + wh[j].log_det;
    for (std::size_t i = 0; i < n; ++i) row[i] = c - 0.5 * row[i];
  }
  kern.log_normalize(resp.data(), k, n, lse.data());
  return kern.sum(lse.data(), n);
}

std::vector<double> data_covariance(const ColumnStore& X, double reg) {
  const std::size_t n = X.rows(), d = X.cols();
  const auto& kern = simd::kernels();
  std::vector<double> ones(n, 1.0), mean(d), cov(d * d);
  for (std::size_t a = 0; a < d; ++a) mean[a] = kern.sum(X.col(a), n) / static_cast<double>(n);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b <= a; ++b)
      cov[a * d + b] = cov[b * d + a] =
          kern.centered_cross(ones.data(), X.col(a), mean[a], X.col(b), mean[b], n) / static_cast<double>(n);
  for (std::size_t a = 0; a < d; ++a) cov[a * d + a] += reg;
  return cov;
}

struct ReseedState {
  bool used = false;
  bool happened_now = false;
};

/// Maximizes the expected complete-data log-likelihood for fixed `resp`.
void m_step(const ColumnStore& X, const std::vector<double>& resp, const GmmParams& p, GmmModel& m, Rng& rng,
            ReseedState& reseed) {
  const std::size_t n = X.rows(), d = X.cols(), k = p.k;
  const auto& kern = simd::kernels();
  constexpr double kTiny = 10.0 * std::numeric_limits<double>::epsilon();
  reseed.happened_now = false;

  std::vector<double> nk(k);
  for (std::size_t j = 0; j < k; ++j) nk[j] = kern.sum(resp.data() + j * n, n) + kTiny;
  double total = 0.0;
  for (double v : nk) total += v;

  m.means = Matrix(k, d);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t a = 0; a < d; ++a) m.means(j, a) = kern.dot(resp.data() + j * n, X.col(a), n) / nk[j];

  auto cross = [&](std::size_t j, std::size_t a, std::size_t b) {
    return kern.centered_cross(resp.data() + j * n, X.col(a), m.means(j, a), X.col(b), m.means(j, b), n);
  };

  switch (p.kind) {
    case CovKind::Full:
      m.covariances.assign(k * d * d, 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        double* c = m.covariances.data() + j * d * d;
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t b = 0; b <= a; ++b) c[a * d + b] = c[b * d + a] = cross(j, a, b) / nk[j];
        for (std::size_t a = 0; a < d; ++a) c[a * d + a] += p.reg_covar;
      }
      break;
    case CovKind::Tied: {
      m.covariances.assign(d * d, 0.0);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
          double s = 0.0;
          for (std::size_t j = 0; j < k; ++j) s += cross(j, a, b);
          m.covariances[a * d + b] = m.covariances[b * d + a] = s / total;
        }
      for (std::size_t a = 0; a < d; ++a) m.covariances[a * d + a] += p.reg_covar;
      break;
    }
    case CovKind::Diagonal:
      m.covariances.assign(k * d, 0.0);
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t a = 0; a < d; ++a) m.covariances[j * d + a] = cross(j, a, a) / nk[j] + p.reg_covar;
      break;
    case CovKind::Spherical:
      m.covariances.assign(k, 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t a = 0; a < d; ++a) s += cross(j, a, a) / nk[j] + p.reg_covar;
        m.covariances[j] = s / static_cast<double>(d);
      }
      break;
  }

  m.weights.resize(k);
  for (std::size_t j = 0; j < k; ++j) m.weights[j] = nk[j] / total;

  // A collapsed component gets one fresh start on a random row with the
  // pooled data covariance; a second collapse is only flagged.
  for (std::size_t j = 0; j < k; ++j) {
    if (m.weights[j] >= 1e-10) continue;
    if (reseed.used) {
      m.degenerate = true;
      continue;
    }
    reseed.used = true;
    reseed.happened_now = true;
    m.reseeded = true;
    const auto row = static_cast<std::size_t>(rng.below(n));
    for (std::size_t a = 0; a < d; ++a) m.means(j, a) = X.at(row, a);
    const auto dc = data_covariance(X, p.reg_covar);
    switch (p.kind) {
      case CovKind::Full:
        std::copy(dc.begin(), dc.end(), m.covariances.begin() + static_cast<std::ptrdiff_t>(j * d * d));
        break;
      case CovKind::Diagonal:
        for (std::size_t a = 0; a < d; ++a) m.covariances[j * d + a] = dc[a * d + a];
        break;
      case CovKind::Spherical: {
        double s = 0.0;
        for (std::size_t a = 0; a < d; ++a) s += dc[a * d + a];
        m.covariances[j] = s / static_cast<double>(d);
        break;
      }
      case CovKind::Tied:
        break;
    }
    m.weights[j] = 1.0 / static_cast<double>(k);
    double s = 0.0;
    for (double w : m.weights) s += w;
    for (double& w : m.weights) w /= s;
  }
}

GmmModel fit_once(const ColumnStore& X, const GmmParams& p, std::uint64_t seed) {
  const std::size_t n = X.rows(), k = p.k;
  Rng rng(seed);
  GmmModel m;
  m.kind = p.kind;
  m.k = k;
  m.d = X.cols();
  m.seed = seed;

  // Hard assignment to the nearest k-means++ seed gives the starting responsibilities.
  const auto seeds = kmeans::plusplus_seeds(X, k, rng);
  Matrix centers(k, X.cols());
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t a = 0; a < X.cols(); ++a) centers(j, a) = X.at(seeds[j], a);
  const auto labels = kmeans::assign(X, centers);
  std::vector<double> resp(k * n, 0.0), lse;
  for (std::size_t i = 0; i < n; ++i) resp[labels[i] * n + i] = 1.0;

  ReseedState reseed;
  m_step(X, resp, p, m, rng, reseed);
  double ll = e_step(X, m, resp, lse);
  m.loglik_history.push_back(ll);

  for (std::size_t it = 1; it <= p.max_iter; ++it) {
    m_step(X, resp, p, m, rng, reseed);
    const double next = e_step(X, m, resp, lse);
    m.loglik_history.push_back(next);
    if (reseed.happened_now) m.reseed_steps.push_back(m.loglik_history.size() - 1);
    m.iterations = it;
    const bool done = std::abs(next - ll) < p.tol * std::abs(ll);
    ll = next;
    if (done) {
      m.converged = true;
      break;
    }
  }
  m.loglik = ll;
  return m;
}

}  // namespace

GmmModel fit_gmm(const Matrix& X, const GmmParams& params) {
  params.validate();
  check_input(X);
  if (X.rows() <= params.k)
    throw GmmError("need more rows than components (rows=" + std::to_string(X.rows()) +
                   ", k=" + std::to_string(params.k) + ")");
  const ColumnStore cols(X);
  GmmModel best;
  bool have = false;
  for (unsigned r = 0; r < std::max(1u, params.n_init); ++r) {
    GmmModel cand = fit_once(cols, params, derive_seed(params.seed, r));
    if (!std::isfinite(cand.loglik)) continue;
    if (!have || cand.loglik > best.loglik) {
      best = std::move(cand);
      have = true;
    }
  }
  if (!have) throw GmmError("every EM restart produced a non-finite likelihood");
  return best;
}

double log_likelihood(const GmmModel& model, const Matrix& X) {
  check_input(X);
  if (X.cols() != model.d) throw GmmError("dimension mismatch");
  std::vector<double> resp, lse;
  return e_step(ColumnStore(X), model, resp, lse);
}

InformationCriteria information_criteria(double loglik, std::size_t n, std::size_t k, std::size_t d, CovKind kind) {
  InformationCriteria ic;
  ic.params = free_parameters(k, d, kind);
  const auto p = static_cast<double>(ic.params);
  ic.bic = p * std::log(static_cast<double>(n)) - 2.0 * loglik;
  ic.aic = 2.0 * p - 2.0 * loglik;
  return ic;
}

InformationCriteria information_criteria(const GmmModel& model, const Matrix& X) {
  return information_criteria(log_likelihood(model, X), X.rows(), model.k, model.d, model.kind);
}

Prediction predict(const GmmModel& model, const Matrix& X) {
  check_input(X);
  if (X.cols() != model.d) throw GmmError("dimension mismatch");
  const std::size_t n = X.rows(), k = model.k;
  std::vector<double> resp, lse;
  e_step(ColumnStore(X), model, resp, lse);
  Prediction p;
  p.labels.assign(n, 0);
  p.responsibilities = Matrix(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t arg = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const double r = resp[j * n + i];
      p.responsibilities(i, j) = r;
      if (r > resp[arg * n + i]) arg = j;
    }
    p.labels[i] = arg;
  }
  return p;
}

ElbowSuggestion suggest_elbow(std::span<const double> series) {
  ElbowSuggestion s;
  double scale = 1.0;
  for (double v : series)
    if (std::isfinite(v)) scale = std::max(scale, std::abs(v));
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 1; i + 1 < series.size(); ++i) {
    const double a = series[i - 1], b = series[i], c = series[i + 1];
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) continue;
    const double d2 = a - 2.0 * b + c;
    if (d2 > best) {
      best = d2;
      arg = i;
    }
  }
  if (!std::isfinite(best)) return s;
  s.curvature = best;
  if (best > 1e-12 * scale) s.k = arg + 1;
  return s;
}

const SweepCell* SweepResult::find(std::size_t k, CovKind kind) const {
  for (const auto& c : cells)
    if (c.k == k && c.kind == kind) return &c;
  return nullptr;
}

std::vector<double> SweepResult::bic_series(CovKind kind) const {
  std::vector<double> out;
  for (const auto& c : cells)
    if (c.kind == kind) out.push_back(c.ok ? c.bic : std::numeric_limits<double>::quiet_NaN());
  return out;
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t k, CovKind kind) {
  return base ^ splitmix64((static_cast<std::uint64_t>(k) << 8) | static_cast<std::uint64_t>(kind));
}

SweepResult sweep(const Matrix& X, const SweepParams& params) {
  SweepResult out;
  out.selected_k = params.selected_k;
  out.selected_kind = params.selected_kind;
  for (CovKind kind : params.kinds)
    for (std::size_t k = 1; k <= params.k_max; ++k) {
      SweepCell c;
      c.k = k;
      c.kind = kind;
      out.cells.push_back(c);
    }
  parallel_for(out.cells.size(), params.threads, [&](std::size_t i) {
    SweepCell& c = out.cells[i];
    GmmParams p = params.base;
    p.k = c.k;
    p.kind = c.kind;
    p.seed = cell_seed(params.base.seed, c.k, c.kind);
    try {
      const GmmModel m = fit_gmm(X, p);
      const auto ic = information_criteria(m.loglik, X.rows(), m.k, m.d, m.kind);
      c.ok = true;
      c.loglik = m.loglik;
      c.bic = ic.bic;
      c.aic = ic.aic;
      c.converged = m.converged;
      c.iterations = m.iterations;
    } catch (const std::exception& e) {
      c.ok = false;
      c.error = e.what();
    }
  });
  for (CovKind kind : params.kinds) out.bic_elbow[kind] = suggest_elbow(out.bic_series(kind));
  return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "k,cov_kind,loglik,bic,aic,converged\n";
  for (const auto& c : sweep.cells) {
    out << c.k << ',' << to_string(c.kind) << ',';
    if (c.ok)
      out << csv::exact(c.loglik) << ',' << csv::exact(c.bic) << ',' << csv::exact(c.aic) << ','
          << (c.converged ? "true" : "false") << '\n';
    else
      out << ",,,failed\n";
  }
}

nlohmann::json to_json(const GmmModel& m) {
  nlohmann::json means = nlohmann::json::array();
  for (std::size_t j = 0; j < m.k; ++j) means.push_back(std::vector<double>(m.means.row(j).begin(), m.means.row(j).end()));
  return {{"cov_kind", to_string(m.kind)},
          {"k", m.k},
          {"d", m.d},
          {"weights", m.weights},
          {"means", means},
          {"covariances", m.covariances},
          {"loglik", m.loglik},
          {"iterations", m.iterations},
          {"converged", m.converged},
          {"reseeded", m.reseeded},
          {"degenerate", m.degenerate},
          {"seed", m.seed}};
}

GmmModel model_from_json(const nlohmann::json& j) {
  GmmModel m;
  m.kind = cov_kind_from_string(j.at("cov_kind").get<std::string>());
  m.k = j.at("k");
  m.d = j.at("d");
  m.weights = j.at("weights").get<std::vector<double>>();
  m.means = Matrix(m.k, m.d);
  const auto& means = j.at("means");
  if (means.size() != m.k) throw GmmError("model JSON: means has wrong row count");
  for (std::size_t r = 0; r < m.k; ++r) {
    const auto row = means.at(r).get<std::vector<double>>();
    if (row.size() != m.d) throw GmmError("model JSON: mean has wrong dimension");
    for (std::size_t a = 0; a < m.d; ++a) m.means(r, a) = row[a];
  }
  m.covariances = j.at("covariances").get<std::vector<double>>();
  m.loglik = j.at("loglik");
  m.iterations = j.at("iterations");
  m.converged = j.at("converged");
  m.reseeded = j.value("reseeded", false);
  m.degenerate = j.value("degenerate", false);
  m.seed = j.at("seed");
  return m;
}

}  // namespace visitscope::gmm
