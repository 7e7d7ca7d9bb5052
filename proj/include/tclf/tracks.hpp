#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tclf/geo.hpp"

namespace tclf {

/// Seconds since 1970-01-01 00:00:00 UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp kFixInterval = 3 * 3600;
inline constexpr Timestamp kMinUnitDuration = 21 * 3600;

/// Accepts "YYYY-MM-DD HH:MM:SS" or "YYYY-MM-DDTHH:MM:SS".
Timestamp parse_iso_time(std::string_view text);
std::string format_iso_time(Timestamp t);

inline double hours_between(Timestamp from, Timestamp to) {
  return static_cast<double>(to - from) / 3600.0;
}

enum class Basin { NI, SI, EP, SP, WP, NA };

const char* to_string(Basin basin);
Basin basin_from_string(std::string_view code);

struct TrackPoint {
  Timestamp time = 0;
  GeoPoint position;
  double dist_to_land_km = 0.0;  // 0 means the fix is over land

  bool over_land() const noexcept { return dist_to_land_km == 0.0; }
  friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

struct Track {
  std::string sid;
  std::string name;
  Basin basin = Basin::NI;
  std::vector<TrackPoint> points;
};

/// Reads the comma-separated track table. Required header columns:
/// sid,name,basin,iso_time,lat,lon,dist2land_km. Rows of one sid must be
/// contiguous and exactly 3 hours apart on the 00/03/.../21 UTC lattice.
std::vector<Track> parse_tracks(std::istream& in);
std::vector<Track> parse_tracks_file(const std::filesystem::path& path);

void write_tracks(std::ostream& out, std::span<const Track> tracks);

/// One ocean run ending in landfall.
struct CycloneUnit {
  std::string id;
  std::string sid;
  Basin basin = Basin::NI;
  std::vector<TrackPoint> ocean_points;
  TrackPoint landfall;

  Timestamp landfall_time() const noexcept { return landfall.time; }
  /// Number of over-ocean fixes before landfall.
  std::size_t ocean_count() const noexcept { return ocean_points.size(); }
  Timestamp duration() const { return landfall.time - ocean_points.front().time; }
};

/// Splits a track into units: every maximal over-ocean run that is
/// immediately followed by an over-land fix. Runs that never reach land or
/// last under 21 hours before landfall are dropped.
std::vector<CycloneUnit> extract_cyclone_units(const Track& track);

std::vector<CycloneUnit> extract_cyclone_units(std::span<const Track> tracks);

}  // namespace tclf
