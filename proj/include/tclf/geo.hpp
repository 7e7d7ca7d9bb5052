#pragma once

#include <array>
#include <cstddef>

namespace tclf {

inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr int kGridSize = 33;
inline constexpr int kGridHalf = 16;
inline constexpr double kGridSpacingDeg = 0.25;

/// A validated position. Latitude lies in [-90, 90]; longitude is
/// normalized into [-180, 180) on construction.
class GeoPoint {
 public:
  GeoPoint() = default;
  GeoPoint(double lat, double lon);

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

/// Wraps any finite longitude into [-180, 180).
double normalize_lon(double lon);

/// Great-circle distance on a sphere of radius kEarthRadiusKm.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

/// Shortest distance from a point to the meridian at `meridian_lon`
/// (a great-circle arc through both poles). Valid for |dlon| <= 90.
double distance_to_meridian_km(const GeoPoint& p, double meridian_lon);

using Grid33 = std::array<double, kGridSize * kGridSize>;

/// Position channels fed to the encoder. Indexing is [row * 33 + col].
///   lats[i][j]  = lat + 0.25 * (j - 16)   (every row identical)
///   longs[i][j] = lon + 0.25 * (i - 16)   (every column identical)
/// Longitudes are not wrapped at the antimeridian.
struct LatLonChannels {
  Grid33 lats{};
  Grid33 longs{};
};

LatLonChannels build_latlon_channels(const GeoPoint& center);

}  // namespace tclf
