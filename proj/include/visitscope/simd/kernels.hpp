#pragma once

// Numeric inner loops shared by the mixture-model and k-means code.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2+FMA
// variant. The active table is picked once at startup from the CPU features
// and the VISITSCOPE_SIMD environment variable (`scalar`, `avx2`, `auto`).
// Results of the two tables agree to rounding (see tests/unit/simd_test.cpp);
// within one table every reduction runs in a fixed order, so a given backend
// is bit-reproducible.
//
// Data layout: a sample matrix is passed as `d` column pointers, each to `n`
// contiguous doubles, so the vector lanes run over rows.

#include <cstddef>

namespace visitscope::simd {

enum class Backend { Scalar, Avx2 };

const char* to_string(Backend b);

struct KernelTable {
  Backend backend;

  /// sum_i x[i]
  double (*sum)(const double* x, std::size_t n);

  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// sum_i w[i] * (x[i] - mx) * (y[i] - my)
  double (*centered_cross)(const double* w, const double* x, double mx, const double* y, double my,
                           std::size_t n);

  /// out[i] = || L (x_i - mean) ||^2 with L lower triangular (d x d, row-major).
  /// Entries above the diagonal are ignored.
  void (*mahalanobis_sq)(const double* const* cols, std::size_t d, std::size_t n, const double* mean,
                         const double* lower, double* out);

  /// out[i] = || x_i - center ||^2
  void (*squared_distance)(const double* const* cols, std::size_t d, std::size_t n, const double* center,
                           double* out);

  /// `logp` holds k rows of n log-weights (component-major). On return
  /// lse[i] = log sum_j exp(logp[j][i]) and logp[j][i] is replaced by the
  /// normalized weight exp(logp[j][i] - lse[i]). Columns that are all -inf
  /// get lse = -inf and uniform weights.
  void (*log_normalize)(double* logp, std::size_t k, std::size_t n, double* lse);

  /// out[i] = exp(x[i])
  void (*exp)(const double* x, double* out, std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the build or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

/// The table currently in use.
const KernelTable& kernels();

/// Switches the active table (tests, benchmarks). Returns false if the
/// backend is unavailable; the active table is then left unchanged.
bool set_backend(Backend b);

}  // namespace visitscope::simd
