#pragma once

#include <cstdint>
#include <functional>

namespace mobility::geo {

inline constexpr double kEarthRadiusM = 6'371'000.0;
// Meridional length of one degree on the grid (spherical approximation).
inline constexpr double kMetersPerDegree = 111'320.0;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoPoint& a, const GeoPoint& b);

/// Cell of an equirectangular grid anchored at (0, 0). Columns are shrunk by
/// cos(ref_lat) so cells are approximately square near ref_lat.
struct CellId {
  std::int64_t row = 0;
  std::int64_t col = 0;
  double size_m = 0.0;

  friend bool operator==(const CellId&, const CellId&) = default;
};

CellId grid_cell(const GeoPoint& p, double size_m, double ref_lat);

struct CellIdHash {
  std::size_t operator()(const CellId& c) const noexcept {
    std::size_t h = std::hash<std::int64_t>{}(c.row);
    h ^= std::hash<std::int64_t>{}(c.col) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<double>{}(c.size_m) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

}  // namespace mobility::geo
