#include "tclf/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tclf/error.hpp"

namespace tclf {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

double normalize_lon(double lon) {
  if (lon >= -180.0 && lon < 180.0) return lon;
  double wrapped = std::fmod(lon + 180.0, 360.0);
  if (wrapped < 0.0) wrapped += 360.0;
  return wrapped - 180.0;
}

GeoPoint::GeoPoint(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 || lat > 90.0) {
    throw FormatError("invalid geographic point (" + std::to_string(lat) + ", " +
                      std::to_string(lon) + ")");
  }
  lat_ = lat;
  lon_ = normalize_lon(lon);
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat() * kDegToRad;
  const double phi2 = b.lat() * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.lon() - a.lon()) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

double distance_to_meridian_km(const GeoPoint& p, double meridian_lon) {
  const double dlambda = normalize_lon(p.lon() - meridian_lon) * kDegToRad;
  const double s = std::abs(std::sin(dlambda)) * std::cos(p.lat() * kDegToRad);
  return kEarthRadiusKm * std::asin(std::min(1.0, s));
}

LatLonChannels build_latlon_channels(const GeoPoint& center) {
  LatLonChannels out;
  for (int i = 0; i < kGridSize; ++i) {
    for (int j = 0; j < kGridSize; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i * kGridSize + j);
      out.lats[idx] = center.lat() + kGridSpacingDeg * (j - kGridHalf);
      out.longs[idx] = center.lon() + kGridSpacingDeg * (i - kGridHalf);
    }
  }
  return out;
}

}  // namespace tclf
