#include "mobility/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mobility::geo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

CellId grid_cell(const GeoPoint& p, double size_m, double ref_lat) {
  const double row = std::floor(p.lat * kMetersPerDegree / size_m);
  const double col = std::floor(p.lon * kMetersPerDegree * std::cos(ref_lat * kDegToRad) / size_m);
  return CellId{static_cast<std::int64_t>(row), static_cast<std::int64_t>(col), size_m};
}

}  // namespace mobility::geo
