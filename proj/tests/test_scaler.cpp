#include <doctest.h>

#include <cmath>

#include "tclf/error.hpp"
#include "tclf/random.hpp"
#include "tclf/scaler.hpp"
#include "tclf/synth.hpp"
#include "tclf/train.hpp"

using namespace tclf;

namespace {

// One unit of 7 ocean points (T=4 gives one sample) whose frames are filled
// by `fill(k, channel, cell)`.
template <typename Fill>
PreparedDataset handmade(Fill fill, std::size_t n_ocean = 7) {
  PreparedDataset ds;
  ds.window = 4;
  UnitFrames uf;
  uf.unit.id = "H_1";
  const Timestamp t0 = parse_iso_time("2020-01-01 00:00:00");
  for (std::size_t k = 0; k < n_ocean; ++k) {
    uf.unit.ocean_points.push_back(TrackPoint{t0 + static_cast<Timestamp>(k) * kFixInterval,
                                              GeoPoint(10, 90.0 - k), 100.0});
  }
  uf.unit.landfall = TrackPoint{t0 + static_cast<Timestamp>(n_ocean) * kFixInterval,
                                GeoPoint(11, 79), 0.0};
  uf.frames.resize(n_ocean * kFrameValues);
  for (std::size_t k = 0; k < n_ocean; ++k) {
    for (std::size_t c = 0; c < kFrameChannels; ++c) {
      for (std::size_t i = 0; i < kGridCells; ++i) {
        uf.frames[k * kFrameValues + c * kGridCells + i] = fill(k, c, i);
      }
    }
  }
  ds.samples = window_unit(uf.unit, 4).samples;
  ds.units.push_back(std::move(uf));
  return ds;
}

}  // namespace

TEST_SUITE("scaler") {
  TEST_CASE("constant channel scales to zero and {0,2} scales to {-1,+1}") {
    // Frame k holds 0 in channel 4 when k is even and 2 when odd; sample 0
    // covers frames 0..3, so mu = 1 and sigma = 1 exactly.
    const PreparedDataset ds = handmade(
        [](std::size_t k, std::size_t c, std::size_t i) {
          if (c == 3) return 7.5f;
          if (c == 4) return (k % 2 == 0) ? 0.0f : 2.0f;
          return static_cast<float>(i);
        },
        8);
    const ScalerStats st = fit_scaler(ds, std::vector<std::size_t>{0});
    CHECK(st.constant[3]);
    CHECK(st.stddev[3] > 0.0);
    CHECK(st.apply(3, 7.5) == 0.0);
    CHECK(st.apply(3, 100.0) == 0.0);
    CHECK(st.mean[4] == 1.0);
    CHECK(st.stddev[4] == 1.0);
    CHECK(st.apply(4, 0.0) == -1.0);
    CHECK(st.apply(4, 2.0) == 1.0);

    const ScaledDataset data(ds, st, std::vector<std::size_t>{0});
    for (double v : data.frame(0, 2).subspan(3 * kGridCells, kGridCells)) CHECK(v == 0.0);
  }

  TEST_CASE("fit then apply standardizes every channel") {
    const SynthBasin s = synthesize_basin(21, 8, Basin::NA);
    const PreparedDataset ds = prepare_dataset(extract_cyclone_units(s.tracks), s.archive, 4,
                                               Basin::NA, SplitMode::Holdout, 3);
    std::vector<std::size_t> all(ds.samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const ScaledDataset data(ds, fit_scaler(ds, all), all);
    std::vector<std::size_t> units(ds.units.size());
    for (std::size_t u = 0; u < units.size(); ++u) units[u] = u;
    for (std::size_t c = 0; c < kFrameChannels; ++c) {
      // Only frames referenced by some window enter the fit; the last three
      // fixes before landfall are never inside a window.
      double sum = 0, sq = 0, n = 0;
      for (std::size_t u : units) {
        for (std::size_t k = 0; k + 3 < ds.units[u].unit.ocean_count(); ++k) {
          const auto f = data.frame(u, k);
          for (std::size_t i = 0; i < kGridCells; ++i) {
            sum += f[c * kGridCells + i];
            n += 1;
          }
        }
      }
      const double mean = sum / n;
      for (std::size_t u : units) {
        for (std::size_t k = 0; k + 3 < ds.units[u].unit.ocean_count(); ++k) {
          const auto f = data.frame(u, k);
          for (std::size_t i = 0; i < kGridCells; ++i) {
            sq += (f[c * kGridCells + i] - mean) * (f[c * kGridCells + i] - mean);
          }
        }
      }
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs(sq / n - 1.0) < 1e-9);
    }
  }

  TEST_CASE("inverse scaling is exact") {
    ScalerStats st;
    Rng rng(3);
    for (std::size_t c = 0; c < kFrameChannels; ++c) {
      st.mean[c] = rng.uniform(-1e4, 1e5);
      st.stddev[c] = rng.uniform(0.1, 1e3);
    }
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t c = rng.below(kFrameChannels);
      const double x = rng.uniform(-2e5, 2e5);
      CHECK(std::abs(st.invert(c, st.apply(c, x)) - x) <= 1e-12 * std::max(1.0, std::abs(x)));
      CHECK(std::abs(st.unscale_target(c % 2, st.scale_target(c % 2, x)) - x) <=
            1e-12 * std::max(1.0, std::abs(x)));
    }
  }

  TEST_CASE("position channels can be exempted") {
    const PreparedDataset ds = handmade([](std::size_t k, std::size_t c, std::size_t i) {
      return static_cast<float>(c * 10 + k + i % 5);
    });
    const ScalerStats st = fit_scaler(ds, std::vector<std::size_t>{0}, false);
    CHECK(st.apply(0, 12.25) == 12.25);
    CHECK(st.apply(1, 88.5) == 88.5);
    CHECK(st.apply(2, 24.0) != 24.0);
  }

  TEST_CASE("location targets are scaled, hours pass through raw") {
    const SynthBasin s = synthesize_basin(22, 6, Basin::WP);
    const PreparedDataset ds = prepare_dataset(extract_cyclone_units(s.tracks), s.archive, 4,
                                               Basin::WP, SplitMode::Holdout, 3);
    const auto train_idx = ds.samples_in(0, Bucket::Train);
    const ScaledDataset data(ds, fit_scaler(ds, train_idx), train_idx);
    const Tensor hours = data.targets(train_idx, TargetKind::Time);
    const Tensor loc = data.targets(train_idx, TargetKind::Location);
    double mean_lat = 0, mean_lon = 0;
    for (std::size_t i = 0; i < train_idx.size(); ++i) {
      const Sample& smp = ds.samples[train_idx[i]];
      CHECK(hours.at(i, 0) == smp.target_hours);
      mean_lat += loc.at(i, 0);
      mean_lon += loc.at(i, 1);
      CHECK(data.stats().unscale_target(0, loc.at(i, 0)) ==
            doctest::Approx(smp.target_location.lat()).epsilon(1e-12));
    }
    CHECK(std::abs(mean_lat / train_idx.size()) < 1e-9);
    CHECK(std::abs(mean_lon / train_idx.size()) < 1e-9);
  }

  TEST_CASE("statistics come from the training bucket only") {
    const SynthBasin s = synthesize_basin(23, 10, Basin::SI);
    const PreparedDataset ds = prepare_dataset(extract_cyclone_units(s.tracks), s.archive, 4,
                                               Basin::SI, SplitMode::Holdout, 5);
    const auto train_idx = ds.samples_in(0, Bucket::Train);
    const ScalerStats fitted = fit_scaler(ds, train_idx);
    // Independent recomputation over the distinct frames of the training units.
    std::array<double, kFrameChannels> sum{};
    double n = 0;
    for (std::size_t u : ds.plan.units_in(0, Bucket::Train)) {
      const std::size_t n_ocean = ds.units[u].unit.ocean_count();
      if (n_ocean < ds.window + 3) continue;
      const std::size_t frames = n_ocean - 3;
      for (std::size_t k = 0; k < frames; ++k) {
        const auto f = ds.units[u].frame(k);
        for (std::size_t c = 0; c < kFrameChannels; ++c) {
          for (std::size_t i = 0; i < kGridCells; ++i) sum[c] += f[c * kGridCells + i];
        }
        n += kGridCells;
      }
    }
    for (std::size_t c = 0; c < kFrameChannels; ++c) {
      CHECK(fitted.mean[c] == doctest::Approx(sum[c] / n).epsilon(1e-12));
    }
    std::vector<std::size_t> all(ds.samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    CHECK_FALSE(fit_scaler(ds, all) == fitted);
  }

  TEST_CASE("empty training set") {
    const PreparedDataset ds =
        handmade([](std::size_t, std::size_t, std::size_t) { return 1.0f; });
    CHECK_THROWS_AS(fit_scaler(ds, std::vector<std::size_t>{}), UsageError);
  }
}
