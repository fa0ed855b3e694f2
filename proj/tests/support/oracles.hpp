#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. They favour obviousness over speed and share no code with the
// library beyond the plain data types.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "visitscope/gmm.hpp"
#include "visitscope/types.hpp"

namespace oracle {

using visitscope::MobilityRecord;
using visitscope::MobilityTrace;

/// Great-circle distance through the 3-D chord, in long double.
inline double chord_distance(double lat1, double lon1, double lat2, double lon2) {
  const long double d2r = std::numbers::pi_v<long double> / 180.0L;
  auto unit = [&](double lat, double lon) {
    const long double a = lat * d2r, b = lon * d2r;
    return std::array<long double, 3>{std::cos(a) * std::cos(b), std::cos(a) * std::sin(b), std::sin(a)};
  };
  const auto p = unit(lat1, lon1), q = unit(lat2, lon2);
  long double c2 = 0;
  for (int i = 0; i < 3; ++i) c2 += (p[i] - q[i]) * (p[i] - q[i]);
  const long double chord = std::sqrt(c2);
  long double half = chord / 2.0L;
  if (half > 1.0L) half = 1.0L;
  return static_cast<double>(2.0L * 6371000.0L * std::asin(half));
}

/// Temporal completeness by enumerating every bin of every day and scanning
/// all records for one inside ](b-1)tau, b*tau].
inline double brute_mu_T(const MobilityTrace& tr, std::int64_t tau, std::int64_t P, int T, std::int64_t start) {
  const std::int64_t nbins = (P + tau - 1) / tau;
  double total = 0.0;
  for (int day = 0; day < T; ++day) {
    const std::int64_t d0 = start + day * P;
    std::int64_t covered = 0;
    for (std::int64_t b = 1; b <= nbins; ++b) {
      const std::int64_t lo = d0 + (b - 1) * tau;
      const std::int64_t hi = std::min(d0 + b * tau, d0 + P);
      bool hit = false;
      for (const auto& r : tr.records)
        if (r.t > lo && r.t <= hi) {
          hit = true;
          break;
        }
      covered += hit;
    }
    total += static_cast<double>(covered) / static_cast<double>(nbins);
  }
  const double mu = total / T;
  return std::min(1.0, std::max(0.0, mu));
}

struct SpatialTally {
  std::size_t good = 0, used = 0;
};

/// Spatial completeness over consecutive pairs of the given trace.
inline SpatialTally brute_mu_S_tally(const MobilityTrace& tr, std::int64_t P, double vmax_kmh) {
  SpatialTally s;
  for (std::size_t i = 1; i < tr.records.size(); ++i) {
    const auto& a = tr.records[i - 1];
    const auto& b = tr.records[i];
    const double dr = chord_distance(a.lat, a.lon, b.lat, b.lon);
    const auto dt = b.t - a.t;
    if (dt == 0 && dr == 0.0) continue;
    ++s.used;
    if (dt == 0) continue;
    // compare in km/h so the arithmetic differs from the library's m/s form
    const double kmh = (dr / 1000.0) / (static_cast<double>(dt) / 3600.0);
    if (dt <= P && kmh <= vmax_kmh) ++s.good;
  }
  return s;
}

inline double brute_mu_S(const MobilityTrace& tr, std::int64_t P, double vmax_kmh) {
  const auto s = brute_mu_S_tally(tr, P, vmax_kmh);
  return s.used == 0 ? 1.0 : static_cast<double>(s.good) / static_cast<double>(s.used);
}

/// Random trace for fuzzing: bursts of dense sampling, multi-hour gaps,
/// repeated timestamps and occasional teleports. Speeds near the threshold
/// are avoided so both implementations see the same side of every
/// comparison despite different rounding.
inline MobilityTrace fuzz_trace(std::mt19937_64& g, std::int64_t day0, int days) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MobilityTrace tr;
  tr.user_id = "fuzz";
  double lat = 1.30 + 0.05 * u(g), lon = 103.8 + 0.05 * u(g);
  std::int64_t t = day0 + static_cast<std::int64_t>(u(g) * 7200) - 3600;
  const std::int64_t end = day0 + static_cast<std::int64_t>(days) * 86400 + 3600;
  const double density = u(g);
  while (t < end) {
    const double r = u(g);
    std::int64_t step;
    if (r < 0.05) step = 3600 + static_cast<std::int64_t>(u(g) * 30 * 3600);  // gap
    else if (r < 0.08) step = 0;                                               // repeated stamp
    else step = 1 + static_cast<std::int64_t>(u(g) * (60 + 3600 * (1.0 - density)));
    t += step;
    double nlat = lat, nlon = lon;
    const double m = u(g);
    if (m < 0.03) {  // teleport, far above any plausible speed
      nlat += (u(g) < 0.5 ? -1 : 1) * (0.5 + u(g));
      nlon += (u(g) < 0.5 ? -1 : 1) * (0.5 + u(g));
    } else if (m < 0.5) {
      nlat += (u(g) - 0.5) * 1e-4;
      nlon += (u(g) - 0.5) * 1e-4;
    }
    if (step == 0 && u(g) < 0.5) {
      nlat = lat;
      nlon = lon;
    }
    nlat = std::round(nlat * 1e6) / 1e6;
    nlon = std::round(nlon * 1e6) / 1e6;
    tr.records.push_back({tr.user_id, nlat, nlon, t});
    lat = nlat;
    lon = nlon;
  }
  return tr;
}

/// Total log-likelihood by evaluating every Gaussian density directly from
/// its dense covariance (Gaussian elimination for the inverse and
/// determinant), then summing weights times densities.
inline double naive_loglik(const visitscope::gmm::GmmModel& m, const visitscope::Matrix& X) {
  const std::size_t d = m.d;
  double total = 0.0;
  std::vector<std::vector<double>> inv(m.k, std::vector<double>(d * d));
  std::vector<double> det(m.k);
  for (std::size_t j = 0; j < m.k; ++j) {
    auto a = m.covariance(j);
    std::vector<double> b(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) b[i * d + i] = 1.0;
    double dt = 1.0;
    for (std::size_t c = 0; c < d; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < d; ++r)
        if (std::abs(a[r * d + c]) > std::abs(a[piv * d + c])) piv = r;
      if (piv != c) {
        for (std::size_t q = 0; q < d; ++q) {
          std::swap(a[c * d + q], a[piv * d + q]);
          std::swap(b[c * d + q], b[piv * d + q]);
        }
        dt = -dt;
      }
      const double p = a[c * d + c];
      dt *= p;
      for (std::size_t q = 0; q < d; ++q) {
        a[c * d + q] /= p;
        b[c * d + q] /= p;
      }
      for (std::size_t r = 0; r < d; ++r) {
        if (r == c) continue;
        const double f = a[r * d + c];
        for (std::size_t q = 0; q < d; ++q) {
          a[r * d + q] -= f * a[c * d + q];
          b[r * d + q] -= f * b[c * d + q];
        }
      }
    }
    inv[j] = b;
    det[j] = dt;
  }
  for (std::size_t i = 0; i < X.rows(); ++i) {
    double p = 0.0;
    for (std::size_t j = 0; j < m.k; ++j) {
      double q = 0.0;
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
          q += (X(i, a) - m.means(j, a)) * inv[j][a * d + b] * (X(i, b) - m.means(j, b));
      p += m.weights[j] * std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * std::numbers::pi, d) * det[j]);
    }
    total += std::log(p);
  }
  return total;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::random_device rd;
  auto p = std::filesystem::temp_directory_path() / ("visitscope_" + tag + "_" + std::to_string(rd()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
