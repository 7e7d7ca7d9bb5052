#pragma once

#include <cstdint>
#include <vector>

#include "tclf/fields.hpp"
#include "tclf/tracks.hpp"

namespace tclf {

/// Idealized coastline of a basin: a meridian with ocean on one side.
struct Coastline {
  double meridian_lon;
  int ocean_side;  // +1: ocean lies east of the meridian, -1: west
  double lat_min;
  double lat_max;

  bool is_ocean(const GeoPoint& p) const;
  /// Great-circle distance to the coastline, 0 on the land side.
  double dist_to_land_km(const GeoPoint& p) const;
};

Coastline basin_coastline(Basin basin);

/// Environmental flow and vortex parameters behind one snapshot.
struct SynthState {
  GeoPoint center;
  double steer_east_ms = 0.0;
  double steer_north_ms = 0.0;
  /// Downstream growth of the zonal steering wind: a parcel moving with it
  /// gains speed at this rate, so cells ahead of the storm carry the faster
  /// flow it will meet later.
  double steer_accel_kmh2 = 0.0;
  double vmax_ms = 30.0;
  double rmax_km = 60.0;
  double depth = 600.0;  // central geopotential deficit at 700 hPa, m^2/s^2
};

/// Fields for one time step, centered on `state.center`.
FieldSnapshot synthesize_snapshot(const SynthState& state, const Coastline& coast);

struct SynthBasin {
  std::vector<Track> tracks;
  FieldArchive archive;
};

/// Seeded synthetic cyclones: each approaches the basin coastline, makes
/// landfall once and lingers two fixes over land. Every track yields exactly
/// one cyclone unit lasting 24 to 120 hours.
SynthBasin synthesize_basin(std::uint64_t seed, std::size_t n_cyclones, Basin basin);

}  // namespace tclf
