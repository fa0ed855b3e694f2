#pragma once

#include <cstddef>

#include "visitscope/simd/kernels.hpp"

namespace visitscope::simd {

namespace scalar {
double sum(const double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double centered_cross(const double* w, const double* x, double mx, const double* y, double my, std::size_t n);
void mahalanobis_sq(const double* const* cols, std::size_t d, std::size_t n, const double* mean,
                    const double* lower, double* out);
void squared_distance(const double* const* cols, std::size_t d, std::size_t n, const double* center,
                      double* out);
void log_normalize_column(double* logp, std::size_t k, std::size_t n, std::size_t i, double* lse);
void log_normalize(double* logp, std::size_t k, std::size_t n, double* lse);
void exp(const double* x, double* out, std::size_t n);
}  // namespace scalar

#if defined(VISITSCOPE_HAVE_AVX2)
namespace avx2 {
double sum(const double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double centered_cross(const double* w, const double* x, double mx, const double* y, double my, std::size_t n);
void mahalanobis_sq(const double* const* cols, std::size_t d, std::size_t n, const double* mean,
                    const double* lower, double* out);
void squared_distance(const double* const* cols, std::size_t d, std::size_t n, const double* center,
                      double* out);
void log_normalize(double* logp, std::size_t k, std::size_t n, double* lse);
void exp(const double* x, double* out, std::size_t n);
}  // namespace avx2
#endif

}  // namespace visitscope::simd
