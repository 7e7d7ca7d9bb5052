#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "tclf/error.hpp"
#include "tclf/fields.hpp"
#include "tclf/random.hpp"
#include "tclf/synth.hpp"

using namespace tclf;

namespace {

FieldSnapshot random_snapshot(Rng& rng) {
  FieldSnapshot s;
  for (float& v : s.values) v = static_cast<float>(rng.uniform(-1e5, 1e5));
  return s;
}

CycloneUnit unit_with(const std::string& id, std::size_t n_ocean) {
  CycloneUnit u;
  u.id = id;
  u.ocean_points.resize(n_ocean, TrackPoint{0, GeoPoint(10, 90), 50.0});
  u.landfall = TrackPoint{0, GeoPoint(10, 80), 0.0};
  return u;
}

std::string serialize(const FieldArchive& a) {
  std::ostringstream out;
  a.write(out);
  return out.str();
}

template <typename T>
void poke(std::string& bytes, std::size_t offset, T value) {
  std::memcpy(bytes.data() + offset, &value, sizeof value);
}

}  // namespace

TEST_SUITE("fields") {
  TEST_CASE("archive write then read is bitwise identical") {
    Rng rng(1);
    FieldArchive a;
    const auto u1 = unit_with("B_1", 3);
    const auto u2 = unit_with("A_1", 1);
    std::vector<FieldSnapshot> s1{random_snapshot(rng), random_snapshot(rng),
                                  random_snapshot(rng)};
    s1[0].values[7] = -0.0f;
    s1[1].values[9] = std::numeric_limits<float>::denorm_min();
    write_fields(a, u1, s1);
    write_fields(a, u2, {random_snapshot(rng)});
    const std::string bytes = serialize(a);
    std::istringstream in(bytes);
    const FieldArchive b = FieldArchive::read(in);
    CHECK(b == a);
    CHECK(serialize(b) == bytes);
    const auto& back = read_fields(b, u1);
    REQUIRE(back.size() == 3);
    CHECK(std::memcmp(back[0].values.data(), s1[0].values.data(), kSnapshotValues * 4) == 0);
    CHECK(std::signbit(back[0].values[7]));
    CHECK(b.ids() == std::vector<std::string>{"A_1", "B_1"});
  }

  TEST_CASE("record header layout") {
    FieldArchive a;
    write_fields(a, unit_with("U", 2), {FieldSnapshot{}, FieldSnapshot{}});
    const std::string bytes = serialize(a);
    CHECK(bytes.substr(0, 4) == "TCLF");
    std::uint32_t v[6];
    std::memcpy(&v[0], bytes.data() + 4, 4);
    std::memcpy(&v[1], bytes.data() + 8, 4);
    CHECK(v[0] == 1);
    CHECK(v[1] == 1);
    CHECK(bytes[12] == 'U');
    std::memcpy(&v[2], bytes.data() + 13, 16);
    CHECK(v[2] == 2);
    CHECK(v[3] == 10);
    CHECK(v[4] == 33);
    CHECK(v[5] == 33);
    CHECK(bytes.size() == 29 + 2 * kSnapshotValues * 4);
  }

  TEST_CASE("missing unit id is not-found") {
    FieldArchive a;
    write_fields(a, unit_with("U", 1), {FieldSnapshot{}});
    CHECK_THROWS_AS(read_fields(a, unit_with("V", 1)), NotFoundError);
  }

  TEST_CASE("corrupt headers are format errors") {
    FieldArchive a;
    write_fields(a, unit_with("U", 1), {FieldSnapshot{}});
    const std::string good = serialize(a);
    const auto check_bad = [](const std::string& bytes) {
      std::istringstream in(bytes);
      CHECK_THROWS_AS(FieldArchive::read(in), FormatError);
    };
    std::string bad = good;
    poke<std::uint32_t>(bad, 17, 11);  // channels
    check_bad(bad);
    bad = good;
    poke<std::uint32_t>(bad, 21, 32);  // height
    check_bad(bad);
    bad = good;
    bad[0] = 'X';
    check_bad(bad);
    bad = good;
    poke<std::uint32_t>(bad, 4, 2);  // version
    check_bad(bad);
    check_bad(good.substr(0, good.size() - 1));
  }

  TEST_CASE("snapshot count must match ocean points") {
    FieldArchive a;
    CHECK_THROWS_AS(write_fields(a, unit_with("U", 2), {FieldSnapshot{}}), FormatError);
    a.put("U", {FieldSnapshot{}});
    CHECK_THROWS_AS(read_fields(a, unit_with("U", 2)), FormatError);
    FieldSnapshot nan;
    nan.values[0] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(write_fields(a, unit_with("W", 1), {nan}), FormatError);
  }

  TEST_CASE("missing SST is filled with the snapshot mean") {
    FieldSnapshot s;
    for (std::size_t i = 0; i < kGridCells; ++i) s.at(kSst, i / 33, i % 33) = 300.0f;
    s.at(kSst, 0, 0) = 296.0f;
    s.at(kSst, 5, 5) = std::numeric_limits<float>::quiet_NaN();
    s.at(kU225, 5, 5) = 1.5f;
    fill_missing_sst(s);
    const double expected = (300.0 * 1087 + 296.0) / 1088.0;
    CHECK(s.at(kSst, 5, 5) == doctest::Approx(expected).epsilon(1e-7));
    CHECK(s.at(kU225, 5, 5) == 1.5f);
    FieldSnapshot all_nan;
    for (std::size_t i = 0; i < kGridCells; ++i) {
      all_nan.at(kSst, i / 33, i % 33) = std::numeric_limits<float>::quiet_NaN();
    }
    CHECK_THROWS_AS(fill_missing_sst(all_nan), FormatError);
  }
}

TEST_SUITE("synth") {
  TEST_CASE("same seed gives bitwise identical outputs") {
    const SynthBasin a = synthesize_basin(7, 4, Basin::NI);
    const SynthBasin b = synthesize_basin(7, 4, Basin::NI);
    CHECK(serialize(a.archive) == serialize(b.archive));
    std::ostringstream ta, tb;
    write_tracks(ta, a.tracks);
    write_tracks(tb, b.tracks);
    CHECK(ta.str() == tb.str());
    const SynthBasin c = synthesize_basin(8, 4, Basin::NI);
    CHECK(serialize(a.archive) != serialize(c.archive));
  }

  TEST_CASE("every generated unit lands after 24 to 120 hours") {
    for (Basin basin : {Basin::NI, Basin::SI, Basin::EP, Basin::SP, Basin::WP, Basin::NA}) {
      const SynthBasin s = synthesize_basin(3, 12, basin);
      REQUIRE(s.tracks.size() == 12);
      const auto units = extract_cyclone_units(s.tracks);
      REQUIRE(units.size() == 12);
      const Coastline coast = basin_coastline(basin);
      for (const auto& u : units) {
        CHECK(u.basin == basin);
        CHECK(u.duration() >= 24 * 3600);
        CHECK(u.duration() <= 120 * 3600);
        CHECK(u.landfall.dist_to_land_km == 0.0);
        CHECK_FALSE(coast.is_ocean(u.landfall.position));
        for (const auto& p : u.ocean_points) {
          CHECK(p.dist_to_land_km > 0.0);
          const double exact = distance_to_meridian_km(p.position, coast.meridian_lon);
          CHECK(std::abs(p.dist_to_land_km - exact) <= 5.000001e-4);
        }
        CHECK(read_fields(s.archive, u).size() == u.ocean_count());
      }
    }
  }

  TEST_CASE("tracks survive the text round trip exactly") {
    const SynthBasin s = synthesize_basin(11, 5, Basin::SP);
    std::stringstream io;
    write_tracks(io, s.tracks);
    const auto back = parse_tracks(io);
    REQUIRE(back.size() == s.tracks.size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i].points == s.tracks[i].points);
  }

  TEST_CASE("vortex eye and steering flow") {
    for (double lat : {15.0, -18.0}) {
      SynthState st;
      st.center = GeoPoint(lat, 100.0);
      st.steer_east_ms = -4.0;
      st.steer_north_ms = 2.0;
      const Coastline coast{60.0, +1, 0, 0};
      const FieldSnapshot snap = synthesize_snapshot(st, coast);
      // The vortex is calm at the eye, leaving only the environmental flow.
      for (FieldChannel c : {kU225, kU500, kU700}) CHECK(snap.at(c, 16, 16) == -4.0f);
      for (FieldChannel c : {kV225, kV500, kV700}) CHECK(snap.at(c, 16, 16) == 2.0f);
      // Cyclonic rotation: north of the eye (col > 16) the vortex blows
      // westward in the northern hemisphere and eastward in the southern.
      const float u_north = snap.at(kU700, 16, 20) + 4.0f;
      CHECK((lat > 0 ? u_north < 0.0f : u_north > 0.0f));
      // Geopotential lowest at the eye on every level once steering is removed.
      SynthState calm = st;
      calm.steer_east_ms = calm.steer_north_ms = 0.0;
      const FieldSnapshot c = synthesize_snapshot(calm, coast);
      for (FieldChannel z : {kZ225, kZ500, kZ700}) {
        CHECK(c.at(z, 16, 16) < c.at(z, 0, 16));
        CHECK(c.at(z, 16, 16) < c.at(z, 16, 32));
      }
      // Geostrophic steering: u = -(1/f) dz/dy, v = (1/f) dz/dx.
      const double f = 2 * 7.2921e-5 * std::sin(lat * M_PI / 180.0);
      const double dy = 2 * 0.25 * kEarthRadiusKm * M_PI / 180.0 * 1000.0;
      const double dx = dy * std::cos(lat * M_PI / 180.0);
      const double dzdy = (double(snap.at(kZ500, 16, 17)) - c.at(kZ500, 16, 17) -
                           (double(snap.at(kZ500, 16, 15)) - c.at(kZ500, 16, 15))) / dy;
      const double dzdx = (double(snap.at(kZ500, 17, 16)) - c.at(kZ500, 17, 16) -
                           (double(snap.at(kZ500, 15, 16)) - c.at(kZ500, 15, 16))) / dx;
      CHECK(-dzdy / f == doctest::Approx(-4.0).epsilon(0.02));
      CHECK(dzdx / f == doctest::Approx(2.0).epsilon(0.02));
    }
  }

  TEST_CASE("zonal steering strengthens downstream") {
    SynthState st;
    st.center = GeoPoint(12.0, 100.0);
    st.steer_east_ms = -4.0;
    st.steer_accel_kmh2 = 0.1;
    const FieldSnapshot snap = synthesize_snapshot(st, Coastline{60.0, +1, 0, 0});
    // Along the eye's row the vortex has no zonal component.
    const double km_per_deg = kEarthRadiusKm * M_PI / 180.0 * std::cos(12.0 * M_PI / 180.0);
    for (int i : {0, 8, 12, 20, 32}) {
      const double downstream_km = -0.25 * (i - 16) * km_per_deg;  // moving west
      const double expected = -std::sqrt(14.4 * 14.4 + 0.2 * downstream_km) / 3.6;
      CHECK(snap.at(kU500, i, 16) == doctest::Approx(expected).epsilon(1e-6));
    }
    CHECK(snap.at(kU500, 0, 16) < snap.at(kU500, 32, 16));
  }

  TEST_CASE("land cells of the SST grid carry the ocean mean") {
    SynthState st;
    st.center = GeoPoint(15.0, 81.0);  // coastline 4 columns west of centre
    const FieldSnapshot snap = synthesize_snapshot(st, basin_coastline(Basin::NI));
    for (float v : snap.values) CHECK(std::isfinite(v));
    const float land = snap.at(kSst, 0, 16);
    CHECK(snap.at(kSst, 0, 10) == land);
    CHECK(snap.at(kSst, 32, 16) != land);
  }
}
