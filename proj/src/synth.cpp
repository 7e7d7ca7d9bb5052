#include "tclf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

#include "tclf/error.hpp"
#include "tclf/random.hpp"

namespace tclf {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kKmPerDeg = kEarthRadiusKm * kDegToRad;
constexpr double kOmega = 7.2921e-5;

struct Level {
  FieldChannel u, v, z;
  double base_z;
  double amplitude;
};

constexpr Level kLevels[] = {
    {kU225, kV225, kZ225, 108500.0, 0.5},
    {kU500, kV500, kZ500, 57500.0, 0.8},
    {kU700, kV700, kZ700, 30400.0, 1.0},
};

// Rounds to `decimals` places such that printing with that many decimals and
// parsing back reproduces the value exactly.
double round_decimals(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(x * scale) / scale;
}

double coriolis(double lat_deg) {
  const double floor = 2.0 * kOmega * std::sin(10.0 * kDegToRad);
  const double f = 2.0 * kOmega * std::sin(lat_deg * kDegToRad);
  if (std::abs(f) >= floor) return f;
  return lat_deg < 0.0 ? -floor : floor;
}

}  // namespace

bool Coastline::is_ocean(const GeoPoint& p) const {
  return ocean_side * normalize_lon(p.lon() - meridian_lon) > 0.0;
}

double Coastline::dist_to_land_km(const GeoPoint& p) const {
  return is_ocean(p) ? distance_to_meridian_km(p, meridian_lon) : 0.0;
}

Coastline basin_coastline(Basin basin) {
  switch (basin) {
    case Basin::NI: return {80.0, +1, 10.0, 20.0};
    case Basin::SI: return {49.0, +1, -22.0, -12.0};
    case Basin::EP: return {-105.0, -1, 15.0, 22.0};
    case Basin::SP: return {153.0, +1, -28.0, -16.0};
    case Basin::WP: return {120.0, +1, 12.0, 25.0};
    case Basin::NA: return {-80.0, +1, 20.0, 30.0};
  }
  throw UsageError("unknown basin");
}

FieldSnapshot synthesize_snapshot(const SynthState& s, const Coastline& coast) {
  FieldSnapshot snap;
  const double lat0 = s.center.lat();
  const double lon0 = s.center.lon();
  const double cos0 = std::cos(lat0 * kDegToRad);
  const double hemisphere = lat0 < 0.0 ? -1.0 : 1.0;
  const double f = coriolis(lat0);
  const double depression_km = 2.5 * s.rmax_km + 100.0;
  const double east_kmh = 3.6 * s.steer_east_ms;
  for (int i = 0; i < kGridSize; ++i) {
    for (int j = 0; j < kGridSize; ++j) {
      const double dlat = kGridSpacingDeg * (j - kGridHalf);
      const double dlon = kGridSpacingDeg * (i - kGridHalf);
      const double x_km = dlon * kKmPerDeg * cos0;
      const double y_km = dlat * kKmPerDeg;
      const double r = std::hypot(x_km, y_km);
      const double speed = r > 0.0 ? s.vmax_ms * (r / s.rmax_km) * std::exp(1.0 - r / s.rmax_km)
                                   : 0.0;
      const double u_vortex = r > 0.0 ? -hemisphere * speed * y_km / r : 0.0;
      const double v_vortex = r > 0.0 ? hemisphere * speed * x_km / r : 0.0;
      const double bowl = std::exp(-0.5 * (r * r) / (depression_km * depression_km));
      // Steady flow: speed^2 grows by 2a per km travelled downstream.
      const double downstream_km = x_km * (s.steer_east_ms < 0.0 ? -1.0 : 1.0);
      const double zonal_kmh = std::sqrt(std::max(
          0.0, east_kmh * east_kmh + 2.0 * s.steer_accel_kmh2 * downstream_km));
      const double env_east = std::copysign(zonal_kmh / 3.6, s.steer_east_ms);
      const double steering = f * (s.steer_north_ms * x_km - s.steer_east_ms * y_km) * 1000.0;
      for (const Level& level : kLevels) {
        snap.at(level.u, i, j) = static_cast<float>(level.amplitude * u_vortex + env_east);
        snap.at(level.v, i, j) = static_cast<float>(level.amplitude * v_vortex + s.steer_north_ms);
        snap.at(level.z, i, j) =
            static_cast<float>(level.base_z - level.amplitude * s.depth * bowl + steering);
      }
      const double cell_lat = lat0 + dlat;
      const double cell_lon = lon0 + dlon;
      const bool ocean =
          std::abs(cell_lat) <= 90.0 && coast.is_ocean(GeoPoint(cell_lat, cell_lon));
      snap.at(kSst, i, j) =
          ocean ? static_cast<float>(304.0 - 0.12 * std::abs(cell_lat) + 0.01 * dlon)
                : std::numeric_limits<float>::quiet_NaN();
    }
  }
  fill_missing_sst(snap);
  return snap;
}

SynthBasin synthesize_basin(std::uint64_t seed, std::size_t n_cyclones, Basin basin) {
  if (n_cyclones == 0) throw UsageError("synthesize_basin needs at least one cyclone");
  const Coastline coast = basin_coastline(basin);
  const Timestamp base = parse_iso_time("2001-06-01 00:00:00");
  SynthBasin out;
  for (std::size_t c = 0; c < n_cyclones; ++c) {
    Rng rng(derive_seed(seed, std::string("synth/") + to_string(basin), c));
    const int n_ocean = 8 + static_cast<int>(rng.below(33));
    const double lat_cross = rng.uniform(coast.lat_min, coast.lat_max);
    const double frac = rng.uniform(0.15, 0.85);
    const double u0 = rng.uniform(10.0, 22.0);    // km/h toward the coast
    const double accel = rng.uniform(0.0, 0.12);  // km/h^2
    const double v0 = rng.uniform(-6.0, 6.0);     // km/h northward
    const double curve = rng.uniform(-0.05, 0.05);
    const double vmax = rng.uniform(20.0, 45.0);
    const double rmax = rng.uniform(40.0, 90.0);
    const double t_cross = 3.0 * (n_ocean - 1) + 3.0 * frac;

    const auto along = [&](double t) { return u0 * t + 0.5 * accel * t * t; };
    const auto across = [&](double t) { return v0 * t + 0.5 * curve * t * t; };

    char sid[32];
    std::snprintf(sid, sizeof sid, "SYN%s%04zu", to_string(basin), c + 1);
    Track track{sid, std::string("SYNTH-") + to_string(basin) + "-" + std::to_string(c + 1),
                basin, {}};
    const Timestamp start = base + static_cast<Timestamp>(c) * 20 * 86400 +
                            static_cast<Timestamp>(rng.below(8)) * kFixInterval;

    std::vector<SynthState> states;
    double noise_x = 0.0, noise_y = 0.0;
    for (int k = 0; k < n_ocean + 3; ++k) {
      const double t = 3.0 * k;
      noise_x = 0.85 * noise_x + 8.0 * rng.normal();
      noise_y = 0.85 * noise_y + 8.0 * rng.normal();
      const double x_clean = along(t) - along(t_cross);
      // Along-track jitter is capped near the coast so the crossing stays
      // between the same two fixes.
      const double cap = 0.9 * std::abs(x_clean);
      const double x_km = x_clean + std::clamp(noise_x, -cap, cap);
      const double y_km = across(t) - across(t_cross) + noise_y;
      const double lat = round_decimals(lat_cross + y_km / kKmPerDeg, 6);
      const double lon = round_decimals(
          normalize_lon(coast.meridian_lon -
                        coast.ocean_side * x_km / (kKmPerDeg * std::cos(lat * kDegToRad))),
          6);
      const GeoPoint p(lat, normalize_lon(lon));
      const double dist = round_decimals(coast.dist_to_land_km(p), 3);
      track.points.push_back(
          TrackPoint{start + static_cast<Timestamp>(k) * kFixInterval, p, dist});

      SynthState state;
      state.center = p;
      state.steer_east_ms = -coast.ocean_side * (u0 + accel * t) / 3.6;
      state.steer_north_ms = (v0 + curve * t) / 3.6;
      state.steer_accel_kmh2 = accel;
      state.vmax_ms = vmax * (0.8 + 0.2 * std::min(1.0, t / 48.0));
      state.rmax_km = rmax;
      state.depth = 400.0 + 10.0 * state.vmax_ms;
      states.push_back(state);
    }

    const auto units = extract_cyclone_units(track);
    if (units.size() != 1 || units.front().ocean_count() != static_cast<std::size_t>(n_ocean)) {
      throw NumericError("synthetic track " + track.sid + " did not form one landfalling unit");
    }
    std::vector<FieldSnapshot> snaps;
    snaps.reserve(static_cast<std::size_t>(n_ocean));
    for (int k = 0; k < n_ocean; ++k) snaps.push_back(synthesize_snapshot(states[k], coast));
    write_fields(out.archive, units.front(), std::move(snaps));
    out.tracks.push_back(std::move(track));
  }
  return out;
}

}  // namespace tclf
