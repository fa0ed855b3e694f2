#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "visitscope/gmm.hpp"
#include "visitscope/rng.hpp"

using namespace visitscope;
using namespace visitscope::gmm;

namespace {

Matrix planted(std::size_t per, std::uint64_t seed, double sep = 6.0) {
  Rng g(seed);
  const double c[3][2] = {{0, 0}, {sep, 0}, {0, sep}};
  Matrix m;
  for (std::size_t i = 0; i < per; ++i)
    for (std::size_t b = 0; b < 3; ++b) {
      const double row[2] = {c[b][0] + g.normal(), c[b][1] + 0.5 * g.normal()};
      m.push_row(row);
    }
  return m;
}

GmmParams params(std::size_t k, CovKind kind, std::uint64_t seed = 1) {
  GmmParams p;
  p.k = k;
  p.kind = kind;
  p.seed = seed;
  p.n_init = 2;
  return p;
}

}  // namespace

TEST_CASE("standard normal density at its mean") {
  GmmModel m;
  m.kind = CovKind::Full;
  m.k = 1;
  m.d = 1;
  m.weights = {1.0};
  m.means = Matrix(1, 1, 0.0);
  m.covariances = {1.0};
  Matrix x(1, 1, 0.0);
  CHECK(log_likelihood(m, x) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(log_likelihood(m, x) == doctest::Approx(-0.9189385332).epsilon(1e-10));
}

TEST_CASE("k=1 is the sample mean and covariance") {
  const Matrix X = planted(40, 8);
  const std::size_t n = X.rows();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += X(i, 0);
    my += X(i, 1);
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (X(i, 0) - mx) * (X(i, 0) - mx);
    sxy += (X(i, 0) - mx) * (X(i, 1) - my);
    syy += (X(i, 1) - my) * (X(i, 1) - my);
  }
  sxx /= n;
  sxy /= n;
  syy /= n;
  for (CovKind kind : {CovKind::Tied, CovKind::Full}) {
    const auto m = fit_gmm(X, params(1, kind));
    CHECK(m.means(0, 0) == doctest::Approx(mx).epsilon(1e-12));
    CHECK(m.means(0, 1) == doctest::Approx(my).epsilon(1e-12));
    const auto c = m.covariance(0);
    CHECK(c[0] == doctest::Approx(sxx + 1e-6).epsilon(1e-10));
    CHECK(c[1] == doctest::Approx(sxy).epsilon(1e-10));
    CHECK(c[3] == doctest::Approx(syy + 1e-6).epsilon(1e-10));
    const double det = c[0] * c[3] - c[1] * c[2];
    const double tr = (c[3] * sxx - 2 * c[1] * sxy + c[0] * syy) / det;
    const double closed = -0.5 * n * (2 * std::log(2 * std::numbers::pi) + std::log(det) + tr);
    CHECK(m.loglik == doctest::Approx(closed).epsilon(1e-10));
  }
}

TEST_CASE("k=1 does not depend on the seed") {
  const Matrix X = planted(20, 2);
  const auto a = fit_gmm(X, params(1, CovKind::Diagonal, 1));
  const auto b = fit_gmm(X, params(1, CovKind::Diagonal, 999));
  CHECK(a.loglik == doctest::Approx(b.loglik).epsilon(1e-12));
}

TEST_CASE("log-likelihood matches naive density summation") {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = 1 + trial % 3, k = 1 + trial % 4;
    const CovKind kind = kAllKinds[trial % 4];
    Matrix X;
    for (int i = 0; i < 30; ++i) {
      std::vector<double> row(d);
      for (auto& v : row) v = 3.0 * u(g);
      X.push_row(row);
    }
    const auto m = fit_gmm(X, params(k, kind, trial));
    const double ll = log_likelihood(m, X);
    CHECK(ll == doctest::Approx(oracle::naive_loglik(m, X)).epsilon(1e-10));
    CHECK(ll == doctest::Approx(m.loglik).epsilon(1e-9));
  }
}

TEST_CASE("free parameter counts") {
  CHECK(free_parameters(1, 2, CovKind::Tied) == 5);
  CHECK(free_parameters(7, 2, CovKind::Tied) == 23);
  CHECK(free_parameters(7, 2, CovKind::Full) == 41);
  for (std::size_t k = 1; k <= 21; ++k)
    for (std::size_t d = 1; d <= 6; ++d) {
      CHECK(free_parameters(k, d, CovKind::Spherical) <= free_parameters(k, d, CovKind::Diagonal));
      CHECK(free_parameters(k, d, CovKind::Diagonal) <= free_parameters(k, d, CovKind::Full));
      CHECK(free_parameters(k, d, CovKind::Tied) <= free_parameters(k, d, CovKind::Full));
    }
  const auto ic = information_criteria(-100.0, 50, 7, 2, CovKind::Tied);
  CHECK(ic.params == 23);
  CHECK(ic.bic == doctest::Approx(23 * std::log(50.0) + 200.0));
  CHECK(ic.aic == doctest::Approx(46.0 + 200.0));
}

TEST_CASE("EM is monotone and weights form a simplex") {
  const Matrix X = planted(60, 4, 3.0);
  for (CovKind kind : kAllKinds)
    for (std::size_t k : {2u, 3u, 5u}) {
      const auto m = fit_gmm(X, params(k, kind, k));
      const auto& h = m.loglik_history;
      for (std::size_t i = 1; i < h.size(); ++i) {
        bool reseed = false;
        for (auto s : m.reseed_steps) reseed |= s == i;
        if (!reseed) CHECK(h[i] >= h[i - 1] - 1e-8 * std::abs(h[i - 1]));
      }
      double s = 0.0;
      for (double w : m.weights) {
        CHECK(w >= 0.0);
        s += w;
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("planted clusters are recovered") {
  Rng g(21);
  Matrix X;
  for (int i = 0; i < 400; ++i) {
    const double c = i % 2 ? 4.0 : -4.0;
    const double row[2] = {c + g.normal(), g.normal()};
    X.push_row(row);
  }
  const auto m = fit_gmm(X, params(2, CovKind::Full, 3));
  const std::size_t lo = m.means(0, 0) < m.means(1, 0) ? 0 : 1;
  CHECK(std::abs(m.means(lo, 0) + 4.0) < 0.15);
  CHECK(std::abs(m.means(1 - lo, 0) - 4.0) < 0.15);
}

TEST_CASE("duplicating every row leaves the model unchanged") {
  const Matrix X = planted(30, 6);
  Matrix XX;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    XX.push_row(X.row(i));
    XX.push_row(X.row(i));
  }
  const auto a = fit_gmm(X, params(3, CovKind::Full, 2));
  const auto b = fit_gmm(XX, params(3, CovKind::Full, 2));
  CHECK(b.loglik == doctest::Approx(2.0 * a.loglik).epsilon(1e-6));
  for (std::size_t j = 0; j < 3; ++j) {
    double best = 1e300;
    for (std::size_t q = 0; q < 3; ++q)
      best = std::min(best, std::abs(a.means(j, 0) - b.means(q, 0)) + std::abs(a.means(j, 1) - b.means(q, 1)));
    CHECK(best < 1e-5);
  }
}

TEST_CASE("tied covariances are shared bit for bit") {
  const auto m = fit_gmm(planted(30, 1), params(4, CovKind::Tied));
  for (std::size_t j = 1; j < 4; ++j) CHECK(m.covariance(j) == m.covariance(0));
}

TEST_CASE("fixed seed gives a bit-identical model") {
  const Matrix X = planted(50, 3);
  const auto a = fit_gmm(X, params(3, CovKind::Full, 77));
  const auto b = fit_gmm(X, params(3, CovKind::Full, 77));
  CHECK(a.means == b.means);
  CHECK(a.covariances == b.covariances);
  CHECK(a.weights == b.weights);
  CHECK(a.loglik == b.loglik);
}

TEST_CASE("row permutation only permutes responsibilities") {
  const Matrix X = planted(20, 10);
  const auto m = fit_gmm(X, params(3, CovKind::Diagonal, 5));
  Matrix Y;
  for (std::size_t i = X.rows(); i-- > 0;) Y.push_row(X.row(i));
  const auto px = predict(m, X), py = predict(m, Y);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    CHECK(px.labels[i] == py.labels[X.rows() - 1 - i]);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(px.responsibilities(i, j) == doctest::Approx(py.responsibilities(X.rows() - 1 - i, j)).epsilon(1e-14));
  }
  CHECK(log_likelihood(m, Y) == doctest::Approx(log_likelihood(m, X)).epsilon(1e-12));
}

TEST_CASE("prediction examples") {
  GmmModel m;
  m.kind = CovKind::Spherical;
  m.k = 2;
  m.d = 2;
  m.weights = {0.5, 0.5};
  m.means = Matrix(2, 2, 0.0);
  m.means(0, 0) = -10;
  m.means(1, 0) = 10;
  m.covariances = {1.0, 1.0};
  Matrix X(3, 2, 0.0);
  X(1, 0) = 10;
  X(2, 0) = -10;
  const auto p = predict(m, X);
  CHECK(std::abs(p.responsibilities(0, 0) - 0.5) < 1e-9);
  CHECK(std::abs(p.responsibilities(0, 1) - 0.5) < 1e-9);
  CHECK(p.labels[0] == 0);
  CHECK(p.labels[1] == 1);
  CHECK(p.responsibilities(1, 1) > 0.99);
  CHECK(p.labels[2] == 0);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(std::abs(p.responsibilities(i, 0) + p.responsibilities(i, 1) - 1.0) < 1e-12);
}

TEST_CASE("input validation") {
  Matrix X(3, 2, 1.0);
  CHECK_THROWS_AS(fit_gmm(X, params(3, CovKind::Full)), GmmError);
  X(0, 0) = std::nan("");
  CHECK_THROWS_AS(fit_gmm(X, params(1, CovKind::Full)), GmmError);
  GmmParams p = params(0, CovKind::Full);
  CHECK_THROWS(p.validate());
  p = params(1, CovKind::Full);
  p.tol = 0;
  CHECK_THROWS(p.validate());
  CHECK(cov_kind_from_string("tied") == CovKind::Tied);
  CHECK_THROWS(cov_kind_from_string("banded"));
}

TEST_CASE("elbow suggestion") {
  std::vector<double> pw;
  for (int k = 1; k <= 21; ++k) pw.push_back(k <= 7 ? 1000.0 - 100.0 * k : 300.0 - 5.0 * (k - 7));
  CHECK(suggest_elbow(pw).k == std::optional<std::size_t>(7));

  std::vector<double> lin;
  for (int k = 1; k <= 21; ++k) lin.push_back(500.0 - 3.0 * k);
  CHECK_FALSE(suggest_elbow(lin).k.has_value());

  // b(k) = (k - 10)^2 has constant curvature 2: the tie goes to the smallest k.
  std::vector<double> quad;
  for (int k = 1; k <= 21; ++k) quad.push_back((k - 10.0) * (k - 10.0));
  const auto e = suggest_elbow(quad);
  CHECK(e.k == std::optional<std::size_t>(2));
  CHECK(e.curvature == doctest::Approx(2.0));

  pw[6] = std::nan("");
  CHECK(suggest_elbow(pw).k != std::optional<std::size_t>(7));
}

TEST_CASE("sweep covers the grid and records failures") {
  const Matrix X = planted(4, 1);  // 12 rows
  SweepParams sp;
  sp.k_max = 14;
  sp.base.n_init = 1;
  const auto r = sweep(X, sp);
  CHECK(r.cells.size() == 14 * 4);
  for (const auto& c : r.cells) CHECK(c.ok == (c.k < 12));
  CHECK(r.find(7, CovKind::Tied) != nullptr);
  CHECK(std::isnan(r.bic_series(CovKind::Full)[12]));
  std::ostringstream os;
  write_sweep_csv(os, r);
  CHECK(os.str().rfind("k,cov_kind,loglik,bic,aic,converged", 0) == 0);

  sp.threads = 3;
  const auto r3 = sweep(X, sp);
  for (std::size_t i = 0; i < r.cells.size(); ++i)
    if (r.cells[i].ok) CHECK(r.cells[i].bic == r3.cells[i].bic);
  CHECK(cell_seed(1, 3, CovKind::Full) != cell_seed(1, 3, CovKind::Tied));
}

TEST_CASE("model json round trip") {
  const auto m = fit_gmm(planted(20, 2), params(3, CovKind::Full, 9));
  const auto back = model_from_json(to_json(m));
  CHECK(back.means == m.means);
  CHECK(back.covariances == m.covariances);
  CHECK(back.weights == m.weights);
  CHECK(back.kind == m.kind);
}
