// Compiled with -mavx2 -mfma; only reached through the dispatch table after
// a runtime CPU check.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "kernels_impl.hpp"

namespace visitscope::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

// Cephes-style exp: x = n ln2 + r with |r| <= ln2/2, e^r from a (2,3) Pade
// form, then scaled by 2^n through the exponent bits.
inline __m256d exp_pd(__m256d x) {
  const __m256d hi_bound = _mm256_set1_pd(709.78);
  const __m256d lo_bound = _mm256_set1_pd(-708.39);
  const __m256d over = _mm256_cmp_pd(x, hi_bound, _CMP_GT_OQ);
  const __m256d under = _mm256_cmp_pd(x, lo_bound, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo_bound), hi_bound);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125E-1), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212E-6), r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(n32);
  bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));

  e = _mm256_blendv_pd(e, _mm256_setzero_pd(), under);
  e = _mm256_blendv_pd(e, _mm256_set1_pd(std::numeric_limits<double>::infinity()), over);
  return e;
}

constexpr std::size_t kMaxVectorDim = 32;

}  // namespace

double sum(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), a1);
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), a0);
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double centered_cross(const double* w, const double* x, double mx, const double* y, double my, std::size_t n) {
  const __m256d vmx = _mm256_set1_pd(mx), vmy = _mm256_set1_pd(my);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + i), vmx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + i), vmy);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), dx), dy, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * (x[i] - mx) * (y[i] - my);
  return s;
}

void mahalanobis_sq(const double* const* cols, std::size_t d, std::size_t n, const double* mean,
                    const double* lower, double* out) {
  if (d > kMaxVectorDim) {
    scalar::mahalanobis_sq(cols, d, n, mean, lower, out);
    return;
  }
  __m256d c[kMaxVectorDim];
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t b = 0; b < d; ++b) c[b] = _mm256_sub_pd(_mm256_loadu_pd(cols[b] + i), _mm256_set1_pd(mean[b]));
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t a = 0; a < d; ++a) {
      __m256d y = _mm256_mul_pd(_mm256_set1_pd(lower[a * d]), c[0]);
      for (std::size_t b = 1; b <= a; ++b) y = _mm256_fmadd_pd(_mm256_set1_pd(lower[a * d + b]), c[b], y);
      acc = _mm256_fmadd_pd(y, y, acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  if (i < n) {
    const double* tail[kMaxVectorDim];
    for (std::size_t b = 0; b < d; ++b) tail[b] = cols[b] + i;
    scalar::mahalanobis_sq(tail, d, n - i, mean, lower, out + i);
  }
}

void squared_distance(const double* const* cols, std::size_t d, std::size_t n, const double* center,
                      double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t b = 0; b < d; ++b) {
      const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(cols[b] + i), _mm256_set1_pd(center[b]));
      acc = _mm256_fmadd_pd(diff, diff, acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t b = 0; b < d; ++b) {
      const double diff = cols[b][i] - center[b];
      acc += diff * diff;
    }
    out[i] = acc;
  }
}

void log_normalize(double* logp, std::size_t k, std::size_t n, double* lse) {
  const __m256d neg_inf = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d m = neg_inf;
    for (std::size_t j = 0; j < k; ++j) m = _mm256_max_pd(m, _mm256_loadu_pd(logp + j * n + i));
    if (_mm256_movemask_pd(_mm256_cmp_pd(m, neg_inf, _CMP_EQ_OQ)) != 0) {
      for (std::size_t l = i; l < i + 4; ++l) scalar::log_normalize_column(logp, k, n, l, lse);
      continue;
    }
    __m256d s = _mm256_setzero_pd();
    for (std::size_t j = 0; j < k; ++j) s = _mm256_add_pd(s, exp_pd(_mm256_sub_pd(_mm256_loadu_pd(logp + j * n + i), m)));
    alignas(32) double sv[4], mv[4];
    _mm256_store_pd(sv, s);
    _mm256_store_pd(mv, m);
    for (int l = 0; l < 4; ++l) sv[l] = mv[l] + std::log(sv[l]);
    const __m256d l = _mm256_load_pd(sv);
    _mm256_storeu_pd(lse + i, l);
    for (std::size_t j = 0; j < k; ++j)
      _mm256_storeu_pd(logp + j * n + i, exp_pd(_mm256_sub_pd(_mm256_loadu_pd(logp + j * n + i), l)));
  }
  for (; i < n; ++i) scalar::log_normalize_column(logp, k, n, i, lse);
}

void exp(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp_pd(_mm256_loadu_pd(x + i)));
  if (i < n) {
    alignas(32) double buf[4] = {0, 0, 0, 0};
    for (std::size_t l = i; l < n; ++l) buf[l - i] = x[l];
    alignas(32) double res[4];
    _mm256_store_pd(res, exp_pd(_mm256_load_pd(buf)));
    for (std::size_t l = i; l < n; ++l) out[l] = res[l - i];
  }
}

}  // namespace visitscope::simd::avx2
