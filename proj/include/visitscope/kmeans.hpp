#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "visitscope/matrix.hpp"
#include "visitscope/rng.hpp"

namespace visitscope::kmeans {

/// k-means++ (D^2-weighted) choice of k distinct seed rows.
std::vector<std::size_t> plusplus_seeds(const ColumnStore& data, std::size_t k, Rng& rng);

struct Params {
  std::size_t k = 3;
  unsigned restarts = 10;
  std::size_t max_iter = 300;
  std::uint64_t seed = 0;
};

struct Result {
  Matrix centers;                  // k x d
  std::vector<std::size_t> labels; // per row
  double inertia = 0.0;
  std::size_t iterations = 0;
};

/// Lloyd iterations from k-means++ seeds; best inertia over `restarts`.
/// Throws std::invalid_argument when k == 0 or k > rows.
Result fit(const Matrix& data, const Params& params);

/// Index of the nearest center; ties go to the lower index.
std::vector<std::size_t> assign(const ColumnStore& data, const Matrix& centers, double* inertia = nullptr);

}  // namespace visitscope::kmeans
