#include <cmath>
#include <limits>

#include "kernels_impl.hpp"

namespace visitscope::simd::scalar {

double sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double centered_cross(const double* w, const double* x, double mx, const double* y, double my, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * (x[i] - mx) * (y[i] - my);
  return s;
}

void mahalanobis_sq(const double* const* cols, std::size_t d, std::size_t n, const double* mean,
                    const double* lower, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      double y = 0.0;
      for (std::size_t b = 0; b <= a; ++b) y += lower[a * d + b] * (cols[b][i] - mean[b]);
      acc += y * y;
    }
    out[i] = acc;
  }
}

void squared_distance(const double* const* cols, std::size_t d, std::size_t n, const double* center,
                      double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t b = 0; b < d; ++b) {
      const double diff = cols[b][i] - center[b];
      acc += diff * diff;
    }
    out[i] = acc;
  }
}

void log_normalize_column(double* logp, std::size_t k, std::size_t n, std::size_t i, double* lse) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double m = kNegInf;
  for (std::size_t j = 0; j < k; ++j) m = std::fmax(m, logp[j * n + i]);
  if (m == kNegInf) {
    lse[i] = kNegInf;
    for (std::size_t j = 0; j < k; ++j) logp[j * n + i] = 1.0 / static_cast<double>(k);
    return;
  }
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += std::exp(logp[j * n + i] - m);
  const double l = m + std::log(s);
  lse[i] = l;
  for (std::size_t j = 0; j < k; ++j) logp[j * n + i] = std::exp(logp[j * n + i] - l);
}

void log_normalize(double* logp, std::size_t k, std::size_t n, double* lse) {
  for (std::size_t i = 0; i < n; ++i) log_normalize_column(logp, k, n, i, lse);
}

void exp(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

}  // namespace visitscope::simd::scalar
