#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mobility/geo.hpp"

using namespace mobility;

namespace {

// Spherical law of cosines, evaluated in long double.
double law_of_cosines_m(geo::GeoPoint a, geo::GeoPoint b) {
  const long double k = std::numbers::pi_v<long double> / 180.0L;
  const long double c = std::sin(a.lat * k) * std::sin(b.lat * k) +
                        std::cos(a.lat * k) * std::cos(b.lat * k) * std::cos((b.lon - a.lon) * k);
  return static_cast<double>(std::acos(std::clamp(c, -1.0L, 1.0L)) * geo::kEarthRadiusM);
}

}  // namespace

TEST_CASE("haversine identities") {
  CHECK(geo::haversine_m({55.7, 12.5}, {55.7, 12.5}) == 0.0);
  CHECK(geo::haversine_m({0, 0}, {0, 180}) == doctest::Approx(std::numbers::pi * 6371000.0).epsilon(1e-12));
}

TEST_CASE("haversine agrees with the law of cosines") {
  const double h = geo::haversine_m({55.0, 12.0}, {55.0, 12.001});
  CHECK(std::abs(h - law_of_cosines_m({55.0, 12.0}, {55.0, 12.001})) / h < 1e-6);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lat(-80, 80), lon(-179, 180), step(-0.5, 0.5);
  for (int i = 0; i < 1000; ++i) {
    const geo::GeoPoint a{lat(rng), lon(rng)};
    const geo::GeoPoint b{std::clamp(a.lat + step(rng), -89.0, 89.0), a.lon + step(rng)};
    const double d = geo::haversine_m(a, b);
    CHECK(d == doctest::Approx(geo::haversine_m(b, a)));
    if (d > 100.0) CHECK(std::abs(d - law_of_cosines_m(a, b)) / d < 1e-6);
  }
}

TEST_CASE("grid cell formula") {
  CHECK(geo::grid_cell({0, 0}, 50, 0) == geo::CellId{0, 0, 50});
  const geo::GeoPoint p{55.78, 12.52};
  const double ref = 55.78;
  const auto c = geo::grid_cell(p, 50, ref);
  const auto row = static_cast<std::int64_t>(std::floor(55.78 * 111320.0 / 50.0));
  const auto col = static_cast<std::int64_t>(std::floor(12.52 * 111320.0 * std::cos(ref * std::numbers::pi / 180.0) / 50.0));
  CHECK(c.row == row);
  CHECK(c.col == col);
}

TEST_CASE("nearby points share coarse cells and cells nest") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lat(55.5, 56.0), lon(12.0, 12.8), jitter(-20.0, 20.0);
  const double ref = 55.7;
  int nested_pairs = 0;
  for (int i = 0; i < 5000; ++i) {
    const geo::GeoPoint a{lat(rng), lon(rng)};
    const geo::GeoPoint b{a.lat + jitter(rng) / geo::kMetersPerDegree, a.lon + jitter(rng) / geo::kMetersPerDegree};
    if (geo::grid_cell(a, 50, ref) == geo::grid_cell(b, 50, ref)) {
      ++nested_pairs;
      CHECK(geo::grid_cell(a, 500, ref) == geo::grid_cell(b, 500, ref));
      CHECK(geo::grid_cell(a, 5000, ref) == geo::grid_cell(b, 5000, ref));
    }
  }
  CHECK(nested_pairs > 1000);
  // 10 m apart, 5000 m cells: equal unless a boundary falls between them.
  int equal = 0;
  for (int i = 0; i < 1000; ++i) {
    const geo::GeoPoint a{lat(rng), lon(rng)};
    equal += geo::grid_cell(a, 5000, ref) == geo::grid_cell({a.lat + 10.0 / geo::kMetersPerDegree, a.lon}, 5000, ref);
  }
  CHECK(equal >= 990);
}
