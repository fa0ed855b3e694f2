#include <doctest.h>

#include <set>
#include <stdexcept>

#include "visitscope/kmeans.hpp"
#include "visitscope/rng.hpp"

using namespace visitscope;

namespace {

Matrix blobs(std::size_t per, std::uint64_t seed) {
  Rng g(seed);
  const double c[3][2] = {{0, 0}, {10, 0}, {0, 10}};
  Matrix m;
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t i = 0; i < per; ++i) {
      const double row[2] = {c[b][0] + 0.3 * g.normal(), c[b][1] + 0.3 * g.normal()};
      m.push_row(row);
    }
  return m;
}

}  // namespace

TEST_CASE("separated blobs are recovered") {
  const Matrix m = blobs(50, 3);
  const auto r = kmeans::fit(m, {.k = 3, .restarts = 5, .max_iter = 100, .seed = 11});
  REQUIRE(r.labels.size() == 150);
  std::set<std::size_t> seen;
  for (std::size_t b = 0; b < 3; ++b) {
    const std::size_t l = r.labels[b * 50];
    seen.insert(l);
    for (std::size_t i = 0; i < 50; ++i) CHECK(r.labels[b * 50 + i] == l);
  }
  CHECK(seen.size() == 3);
  CHECK(r.inertia < 150 * 0.3 * 0.3 * 2 * 1.5);
}

TEST_CASE("assign matches the nearest center by brute force") {
  const Matrix m = blobs(30, 5);
  Matrix centers(4, 2);
  centers(0, 0) = 1; centers(1, 0) = 5; centers(2, 1) = 5; centers(3, 0) = 9; centers(3, 1) = 9;
  double inertia = 0.0;
  const auto labels = kmeans::assign(ColumnStore(m), centers, &inertia);
  double expect = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::size_t best = 0;
    double bd = 1e300;
    for (std::size_t j = 0; j < 4; ++j) {
      const double dx = m(i, 0) - centers(j, 0), dy = m(i, 1) - centers(j, 1);
      if (dx * dx + dy * dy < bd) {
        bd = dx * dx + dy * dy;
        best = j;
      }
    }
    CHECK(labels[i] == best);
    expect += bd;
  }
  CHECK(inertia == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ties go to the lower center") {
  Matrix m(1, 1, 0.0);
  Matrix centers(2, 1);
  centers(0, 0) = -1;
  centers(1, 0) = 1;
  CHECK(kmeans::assign(ColumnStore(m), centers)[0] == 0);
}

TEST_CASE("plus-plus seeds are distinct rows") {
  const Matrix m = blobs(20, 9);
  Rng rng(1);
  const auto s = kmeans::plusplus_seeds(ColumnStore(m), 6, rng);
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 6);
}

TEST_CASE("fit is deterministic and validates k") {
  const Matrix m = blobs(20, 2);
  const auto a = kmeans::fit(m, {.k = 3, .seed = 4});
  const auto b = kmeans::fit(m, {.k = 3, .seed = 4});
  CHECK(a.centers == b.centers);
  CHECK(a.labels == b.labels);
  CHECK_THROWS_AS(kmeans::fit(m, {.k = 0}), std::invalid_argument);
  CHECK_THROWS_AS(kmeans::fit(m, {.k = 61}), std::invalid_argument);
}
