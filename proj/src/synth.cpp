#include "visitscope/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "visitscope/csv.hpp"
#include "visitscope/geo.hpp"
#include "visitscope/rng.hpp"

namespace visitscope::synth {
namespace {

constexpr std::array<const char*, 10> kCategories = {"residential", "office", "food",     "retail", "park",
                                                     "gym",         "school", "hospital", "entertainment", "hotel"};

struct Place {
  double lat = 0.0;
  double lon = 0.0;
  std::optional<PoiId> poi;
};

struct Stay {
  Place place;
  std::int64_t s0 = 0;  // first sample index at the place
  std::int64_t s1 = 0;  // last sample index at the place
};

double meters_to_lat(double m) { return m / geo::kEarthRadiusM * 180.0 / std::numbers::pi; }
double meters_to_lon(double m, double lat) {
  return meters_to_lat(m) / std::cos(lat * std::numbers::pi / 180.0);
}

class Planner {
 public:
  Planner(Place home, std::int64_t total, const PopulationParams& p) : cur_(std::move(home)), total_(total), p_(p) {}

  std::int64_t now() const { return cur_start_; }

  // Leave the current place at sample `leave` (or as soon as the minimum
  // stay allows) and travel to `next`.
  void go(const Place& next, std::int64_t leave) {
    leave = std::max(leave, cur_start_ + 6);
    if (leave >= total_) return;
    const double d = geo::haversine(cur_.lat, cur_.lon, next.lat, next.lon);
    const auto steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(d / (p_.speed_mps * p_.sample_s))));
    if (leave + steps >= total_) return;
    stays_.push_back({cur_, cur_start_, leave});
    cur_ = next;
    cur_start_ = leave + steps;
  }

  std::vector<Stay> finish() {
    stays_.push_back({cur_, cur_start_, total_ - 1});
    return std::move(stays_);
  }

 private:
  Place cur_;
  std::int64_t cur_start_ = 0;
  std::int64_t total_;
  const PopulationParams& p_;
  std::vector<Stay> stays_;
};

}  // namespace

std::string user_name(std::size_t u) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", u);
  return buf;
}

Population generate_population(const PopulationParams& p) {
  if (p.users == 0 || p.days < 1 || p.pois < 2 * kCategories.size())
    throw std::invalid_argument("synthetic population needs users >= 1, days >= 1 and pois >= 20");
  Rng rng(p.seed);
  Population pop;

  // PoIs on a jittered square grid, categories dealt in turn.
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p.pois))));
  for (std::size_t i = 0; i < p.pois; ++i) {
    const double north = static_cast<double>(i / side) * p.spacing_m + (rng.uniform() - 0.5) * 200.0;
    const double east = static_cast<double>(i % side) * p.spacing_m + (rng.uniform() - 0.5) * 200.0;
    const double lat = p.lat0 + meters_to_lat(north);
    const double lon = p.lon0 + meters_to_lon(east, p.lat0);
    char id[16];
    std::snprintf(id, sizeof id, "P%03zu", i);
    pop.pois.push_back({id, std::round(lat * 1e6) / 1e6, std::round(lon * 1e6) / 1e6, kCategories[i % kCategories.size()]});
  }
  std::map<std::string, std::vector<std::size_t>> by_cat;
  for (std::size_t i = 0; i < pop.pois.size(); ++i) by_cat[pop.pois[i].category].push_back(i);
  auto place_of = [&](std::size_t i) { return Place{pop.pois[i].lat, pop.pois[i].lon, pop.pois[i].poi_id}; };
  auto pick = [&](const char* cat) { const auto& v = by_cat[cat]; return v[rng.below(v.size())]; };

  const std::int64_t per_day = 86400 / p.sample_s;
  const std::int64_t total = per_day * p.days;
  const auto day0 = make_timestamp({p.start_year, p.start_month, p.start_day, 0, 0, 0});
  if (!day0) throw std::invalid_argument("bad start date");
  auto hour = [&](double h) { return static_cast<std::int64_t>(h * 3600.0 / p.sample_s); };

  for (std::size_t u = 0; u < p.users; ++u) {
    const UserId user = user_name(u);
    const Place home = place_of(by_cat["residential"][u % by_cat["residential"].size()]);
    const Place work = place_of(by_cat["office"][u % by_cat["office"].size()]);
    std::vector<Place> favorites{place_of(pick("food")), place_of(pick("gym"))};
    std::vector<Place> occasional;
    for (const char* c : {"retail", "food", "hospital", "school", "retail", "entertainment"})
      occasional.push_back(place_of(pick(c)));
    std::vector<Place> leisure{place_of(pick("park")), place_of(pick("entertainment")), place_of(pick("park"))};
    const Place hotel = place_of(pick("hotel"));

    Planner plan(home, total, p);
    bool trip_done = u % 3 != 2;  // every third user takes one overnight trip
    for (int d = 0; d < p.days; ++d) {
      const std::int64_t base = per_day * d;
      if (plan.now() >= base + per_day) continue;  // still away on a trip
      const int dow = day_of_week(*day0 + static_cast<std::int64_t>(d) * 86400);
      if (dow < 5) {
        plan.go(work, base + hour(7.5) + static_cast<std::int64_t>(rng.below(12)));
        const std::int64_t off = base + hour(17.0) + static_cast<std::int64_t>(rng.below(12));
        const double r = rng.uniform();
        if (r < 0.45) {
          plan.go(favorites[rng.below(favorites.size())], off);
          plan.go(home, plan.now() + 6 + static_cast<std::int64_t>(rng.below(13)));
        } else if (r < 0.65) {
          plan.go(occasional[rng.below(occasional.size())], off);
          plan.go(home, plan.now() + 12 + static_cast<std::int64_t>(rng.below(25)));
        } else if (r < 0.80) {
          // stop away from any PoI
          const Place a = place_of(rng.below(pop.pois.size()));
          const Place spot{a.lat + meters_to_lat(p.spacing_m / 2), a.lon + meters_to_lon(p.spacing_m / 2, a.lat), {}};
          plan.go(spot, off);
          plan.go(home, plan.now() + 8 + static_cast<std::int64_t>(rng.below(5)));
        } else {
          plan.go(home, off);
        }
      } else if (!trip_done) {
        trip_done = true;
        plan.go(hotel, base + hour(10.0) + static_cast<std::int64_t>(rng.below(12)));
        plan.go(home, base + per_day + hour(16.0));
      } else {
        plan.go(leisure[rng.below(leisure.size())], base + hour(10.0) + static_cast<std::int64_t>(rng.below(24)));
        const bool long_outing = rng.uniform() < 0.3;
        plan.go(home, plan.now() + (long_outing ? 120 + static_cast<std::int64_t>(rng.below(25))
                                                : 24 + static_cast<std::int64_t>(rng.below(37))));
        if (rng.uniform() < 0.5) {
          plan.go(occasional[rng.below(occasional.size())], plan.now() + 12 + static_cast<std::int64_t>(rng.below(12)));
          plan.go(home, plan.now() + 8 + static_cast<std::int64_t>(rng.below(12)));
        }
      }
    }
    const auto stays = plan.finish();

    const Timestamp t0 = *day0 + 60 + static_cast<Timestamp>(u) * 7;
    auto time_of = [&](std::int64_t s) { return t0 + s * p.sample_s; };
    for (const auto& st : stays) pop.truth.push_back({user, st.place.lat, st.place.lon, st.place.poi, time_of(st.s0), time_of(st.s1)});

    std::size_t k = 0;
    for (std::int64_t s = 0; s < total; ++s) {
      while (stays[k].s1 < s) ++k;
      double lat, lon;
      if (s >= stays[k].s0) {
        lat = stays[k].place.lat;
        lon = stays[k].place.lon;
      } else {
        const auto& a = stays[k - 1];
        const auto& b = stays[k];
        const double f = static_cast<double>(s - a.s1) / static_cast<double>(b.s0 - a.s1);
        lat = a.place.lat + f * (b.place.lat - a.place.lat);
        lon = a.place.lon + f * (b.place.lon - a.place.lon);
      }
      lat += meters_to_lat(p.jitter_m * rng.normal());
      lon += meters_to_lon(p.jitter_m * rng.normal(), lat);
      pop.records.push_back({user, std::round(lat * 1e6) / 1e6, std::round(lon * 1e6) / 1e6, time_of(s)});
    }
  }
  return pop;
}

void write_trajectory_csv(std::ostream& out, std::span<const MobilityRecord> records) {
  out << "user_id,lat,lon,timestamp\n";
  for (const auto& r : records)
    out << csv::escape(r.user_id) << ',' << csv::fixed(r.lat, 6) << ',' << csv::fixed(r.lon, 6) << ','
        << format_iso8601(r.t) << '\n';
}

void write_plt_corpus(const std::filesystem::path& root, std::span<const MobilityRecord> records) {
  std::map<std::pair<UserId, std::int64_t>, std::vector<const MobilityRecord*>> files;
  for (const auto& r : records) files[{r.user_id, day_index(r.t)}].push_back(&r);
  for (const auto& [key, rows] : files) {
    const auto dir = root / key.first / "Trajectory";
    std::filesystem::create_directories(dir);
    std::string date = format_date(rows.front()->t);
    std::erase(date, '-');
    std::ofstream out(dir / (date + ".plt"), std::ios::binary);
    out << "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,8421376\n0\n";
    for (const auto* r : rows) {
      const std::string iso = format_iso8601(r->t);
      const double days = static_cast<double>(r->t) / 86400.0 + 25569.0;
      out << csv::fixed(r->lat, 6) << ',' << csv::fixed(r->lon, 6) << ",0,100," << csv::fixed(days, 10) << ','
          << iso.substr(0, 10) << ',' << iso.substr(11) << '\n';
    }
  }
}

}  // namespace visitscope::synth
