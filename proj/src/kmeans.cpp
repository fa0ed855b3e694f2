#include "visitscope/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "visitscope/simd/kernels.hpp"

namespace visitscope::kmeans {

namespace {

std::vector<double> row_of(const ColumnStore& data, std::size_t i) {
  std::vector<double> r(data.cols());
  for (std::size_t a = 0; a < data.cols(); ++a) r[a] = data.at(i, a);
  return r;
}

}  // namespace

std::vector<std::size_t> plusplus_seeds(const ColumnStore& data, std::size_t k, Rng& rng) {
  const std::size_t n = data.rows();
  const auto& kern = simd::kernels();
  std::vector<std::size_t> seeds;
  if (k == 0 || n == 0) return seeds;
  seeds.push_back(static_cast<std::size_t>(rng.below(n)));

  std::vector<double> best(n), dist(n);
  auto center = row_of(data, seeds[0]);
  kern.squared_distance(data.cols_ptr(), data.cols(), n, center.data(), best.data());

  while (seeds.size() < k) {
    const double total = kern.sum(best.data(), n);
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        acc += best[i];
        if (acc > target && best[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // rounding at the top end: last row with mass
        for (std::size_t i = n; i-- > 0;)
          if (best[i] > 0.0) {
            pick = i;
            break;
          }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    seeds.push_back(pick);
    center = row_of(data, pick);
    kern.squared_distance(data.cols_ptr(), data.cols(), n, center.data(), dist.data());
    for (std::size_t i = 0; i < n; ++i) best[i] = std::min(best[i], dist[i]);
  }
  return seeds;
}

std::vector<std::size_t> assign(const ColumnStore& data, const Matrix& centers, double* inertia) {
  const std::size_t n = data.rows();
  const auto& kern = simd::kernels();
  std::vector<std::size_t> labels(n, 0);
  std::vector<double> best(n, std::numeric_limits<double>::infinity()), dist(n);
  for (std::size_t j = 0; j < centers.rows(); ++j) {
    kern.squared_distance(data.cols_ptr(), data.cols(), n, centers.row(j).data(), dist.data());
    for (std::size_t i = 0; i < n; ++i)
      if (dist[i] < best[i]) {
        best[i] = dist[i];
        labels[i] = j;
      }
  }
  if (inertia) *inertia = kern.sum(best.data(), n);
  return labels;
}

namespace {

Result lloyd(const ColumnStore& data, std::size_t k, std::size_t max_iter, Rng& rng) {
  const std::size_t n = data.rows(), d = data.cols();
  Result r;
  r.centers = Matrix(k, d);
  const auto seeds = plusplus_seeds(data, k, rng);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t a = 0; a < d; ++a) r.centers(j, a) = data.at(seeds[j], a);

  r.labels = assign(data, r.centers, &r.inertia);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    r.iterations = it;
    Matrix next(k, d);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[r.labels[i]];
      for (std::size_t a = 0; a < d; ++a) next(r.labels[i], a) += data.at(i, a);
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (count[j] == 0) {
        // Empty cluster: move it onto the row farthest from its center.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          double dd = 0.0;
          for (std::size_t a = 0; a < d; ++a) {
            const double diff = data.at(i, a) - r.centers(r.labels[i], a);
            dd += diff * diff;
          }
          if (dd > far_d) {
            far_d = dd;
            far = i;
          }
        }
        for (std::size_t a = 0; a < d; ++a) next(j, a) = data.at(far, a);
      } else {
        for (std::size_t a = 0; a < d; ++a) next(j, a) /= static_cast<double>(count[j]);
      }
    }
    r.centers = std::move(next);
    double inertia = 0.0;
    auto labels = assign(data, r.centers, &inertia);
    const bool stable = labels == r.labels;
    r.labels = std::move(labels);
    r.inertia = inertia;
    if (stable) break;
  }
  return r;
}

}  // namespace

Result fit(const Matrix& data, const Params& params) {
  if (params.k == 0) throw std::invalid_argument("k-means needs k >= 1");
  if (params.k > data.rows()) throw std::invalid_argument("k-means needs at least k rows");
  const ColumnStore cols(data);
  Result best;
  bool have = false;
  for (unsigned r = 0; r < std::max(1u, params.restarts); ++r) {
    Rng rng(derive_seed(params.seed, r));
    Result cand = lloyd(cols, params.k, params.max_iter, rng);
    if (!have || cand.inertia < best.inertia) {
      best = std::move(cand);
      have = true;
    }
  }
  return best;
}

}  // namespace visitscope::kmeans
