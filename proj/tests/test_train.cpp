#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "tclf/error.hpp"
#include "tclf/synth.hpp"
#include "tclf/train.hpp"

using namespace tclf;

namespace {

ModelConfig tiny(std::size_t window, std::size_t head) {
  ModelConfig cfg;
  cfg.window = window;
  cfg.head_width = head;
  cfg.conv_filters = {4, 8};
  cfg.encoder_width = 16;
  cfg.lstm_hidden = {16};
  cfg.dense_width = 16;
  return cfg;
}

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

const PreparedDataset& small_basin() {
  static const PreparedDataset ds = [] {
    const SynthBasin s = synthesize_basin(101, 10, Basin::NI);
    return prepare_dataset(extract_cyclone_units(s.tracks), s.archive, 4, Basin::NI,
                           SplitMode::KFold, 9);
  }();
  return ds;
}

// Straight westward track along the equator, 10 ocean fixes 0.5 deg apart.
PreparedDataset equator_track() {
  PreparedDataset ds;
  ds.window = 4;
  UnitFrames uf;
  uf.unit.id = "EQ_1";
  const Timestamp t0 = parse_iso_time("2010-05-01 00:00:00");
  for (std::size_t k = 0; k < 10; ++k) {
    uf.unit.ocean_points.push_back(TrackPoint{t0 + static_cast<Timestamp>(k) * kFixInterval,
                                              GeoPoint(0, 90.0 - 0.5 * k), 50.0 * (10 - k)});
  }
  uf.unit.landfall = TrackPoint{t0 + 10 * kFixInterval, GeoPoint(0, 85.0), 0.0};
  uf.frames.assign(10 * kFrameValues, 1.0f);
  ds.samples = window_unit(uf.unit, 4).samples;
  ds.units.push_back(std::move(uf));
  return ds;
}

std::vector<std::vector<double>> snapshot(const LandfallModel& m) {
  std::vector<std::vector<double>> out;
  for (const Parameter* p : m.parameters()) {
    out.emplace_back(p->value.data().begin(), p->value.data().end());
  }
  return out;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("a small model memorizes a handful of samples") {
    const PreparedDataset& ds = small_basin();
    // First window of four different units, so the targets differ.
    std::vector<std::size_t> few;
    for (std::size_t i = 0; i < ds.samples.size() && few.size() < 4; ++i) {
      if (few.empty() || ds.samples[i].unit != ds.samples[few.back()].unit) few.push_back(i);
    }
    REQUIRE(few.size() == 4);
    const ScaledDataset data(ds, fit_scaler(ds, few), few);
    LandfallModel model(tiny(4, 2), 5);
    TrainConfig cfg;
    cfg.epochs = 500;
    cfg.batch_size = 4;
    const Tensor y = data.targets(few, TargetKind::Location);
    double var = 0;
    for (double v : y.data()) var += v * v;
    var /= static_cast<double>(y.size());
    const TrainHistory h = train(model, data, TargetKind::Location, few, {}, cfg);
    REQUIRE(h.train_mse.size() == 500);
    CHECK(h.val_mse.empty());
    const Tensor pred = predict_scaled(model, data, few);
    CHECK(var > 0.1);
    CHECK(mse(y.data(), pred.data()) < 1e-3 * var);
  }

  TEST_CASE("zero learning rate leaves the weights untouched") {
    const PreparedDataset& ds = small_basin();
    const auto idx = ds.samples_in(0, Bucket::Train);
    const ScaledDataset data(ds, fit_scaler(ds, idx), idx);
    LandfallModel model(tiny(4, 2), 6);
    const auto before = snapshot(model);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.lr = 0.0;
    train(model, data, TargetKind::Location, idx, {}, cfg);
    CHECK(snapshot(model) == before);
  }

  TEST_CASE("same seed gives the same history and weights") {
    const PreparedDataset& ds = small_basin();
    const auto tr = ds.samples_in(0, Bucket::Train);
    const auto va = ds.samples_in(0, Bucket::Validation);
    std::vector<std::size_t> used = tr;
    used.insert(used.end(), va.begin(), va.end());
    const ScaledDataset data(ds, fit_scaler(ds, tr), used);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 44;
    LandfallModel a(tiny(4, 1), 8), b(tiny(4, 1), 8);
    const TrainHistory ha = train(a, data, TargetKind::Time, tr, va, cfg);
    const TrainHistory hb = train(b, data, TargetKind::Time, tr, va, cfg);
    CHECK(ha.train_mse == hb.train_mse);
    CHECK(ha.val_mse == hb.val_mse);
    CHECK(ha.val_mse.size() == 3);
    CHECK(snapshot(a) == snapshot(b));
  }

  TEST_CASE("non-finite loss aborts training") {
    const PreparedDataset& ds = small_basin();
    const auto idx = ds.samples_in(0, Bucket::Train);
    const ScaledDataset data(ds, fit_scaler(ds, idx), idx);
    LandfallModel model(tiny(4, 2), 7);
    model.parameters().back()->value.fill(std::numeric_limits<double>::quiet_NaN());
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(train(model, data, TargetKind::Location, idx, {}, cfg), NumericError);
  }

  TEST_CASE("argument checks") {
    const PreparedDataset& ds = small_basin();
    const auto idx = ds.samples_in(0, Bucket::Train);
    const ScaledDataset data(ds, fit_scaler(ds, idx), idx);
    TrainConfig cfg;
    cfg.epochs = 1;
    LandfallModel loc(tiny(4, 2), 1);
    CHECK_THROWS_AS(train(loc, data, TargetKind::Time, idx, {}, cfg), UsageError);
    CHECK_THROWS_AS(train(loc, data, TargetKind::Location, {}, {}, cfg), UsageError);
    LandfallModel wrong_window(tiny(6, 2), 1);
    CHECK_THROWS_AS(train(wrong_window, data, TargetKind::Location, idx, {}, cfg), UsageError);
  }

  TEST_CASE("perfect predictions score zero") {
    const PreparedDataset ds = equator_track();
    const auto idx = iota_n(ds.samples.size());
    std::vector<GeoPoint> loc;
    std::vector<double> hrs;
    for (std::size_t i : idx) {
      loc.push_back(ds.samples[i].target_location);
      hrs.push_back(ds.samples[i].target_hours);
    }
    const FoldMetrics m = score_predictions(ds, idx, loc, hrs);
    for (double v : {m.rmse_lat, m.rmse_lon, m.rmse_time, m.mae_lat, m.mae_lon, m.mae_time,
                     m.mae_distance_km}) {
      CHECK(v == 0.0);
    }
    CHECK(m.n_samples == idx.size());
  }

  TEST_CASE("one degree of longitude on the equator") {
    const PreparedDataset ds = equator_track();
    const auto idx = iota_n(ds.samples.size());
    std::vector<GeoPoint> loc;
    std::vector<double> hrs;
    for (std::size_t i : idx) {
      const GeoPoint t = ds.samples[i].target_location;
      loc.emplace_back(t.lat(), t.lon() + 1.0);
      hrs.push_back(ds.samples[i].target_hours + 2.0);
    }
    const FoldMetrics m = score_predictions(ds, idx, loc, hrs);
    const double km = 6371.0088 * std::numbers::pi / 180.0;
    CHECK(m.mae_distance_km == doctest::Approx(km).epsilon(1e-9));
    CHECK(std::abs(km - 111.19) < 0.01);
    CHECK(m.mae_lon == doctest::Approx(1.0));
    CHECK(m.mae_time == doctest::Approx(2.0));
    CHECK(m.rmse_time == doctest::Approx(2.0));
  }

  TEST_CASE("persistence baselines") {
    const PreparedDataset ds = equator_track();
    const Sample& s = ds.samples.front();
    // Window 0..3 ends at 88.5E, 350 km from land, moving 0.5 deg per 3 h.
    CHECK(persistence_location(ds, s).lon() == doctest::Approx(88.5));
    const double speed = 0.5 * 6371.0088 * std::numbers::pi / 180.0 / 3.0;
    CHECK(persistence_hours(ds, s) == doctest::Approx(350.0 / speed));
  }

  TEST_CASE("metrics across folds keep rmse above mae") {
    const PreparedDataset& ds = small_basin();
    KFoldOptions opt;
    opt.model = tiny(4, 2);
    opt.train.epochs = 2;
    opt.train.seed = 12;
    const KFoldResult r = evaluate_kfold(ds, opt);
    REQUIRE(r.folds.size() == kFolds);
    CHECK(r.report.fold_count == kFolds);
    std::size_t total = 0;
    for (const FoldOutcome& f : r.folds) {
      CHECK(f.metrics.rmse_lat >= f.metrics.mae_lat);
      CHECK(f.metrics.rmse_lon >= f.metrics.mae_lon);
      CHECK(f.metrics.rmse_time >= f.metrics.mae_time);
      CHECK(f.location_history.train_mse.size() == 2);
      total += f.metrics.n_samples;
    }
    // Each unit lands in exactly one test fold.
    CHECK(total == ds.samples.size());
  }

  TEST_CASE("trace covers every admissible window end") {
    const PreparedDataset& ds = small_basin();
    const auto idx = iota_n(ds.samples.size());
    const ScaledDataset data(ds, fit_scaler(ds, idx), idx);
    LandfallModel loc(tiny(4, 2), 2), hrs(tiny(4, 1), 3);
    for (const UnitFrames& uf : ds.units) {
      const auto rows = trace_cyclone(loc, data.stats(), hrs, data.stats(), uf);
      const std::size_t n = uf.unit.ocean_count();
      if (n < 7) {
        CHECK(rows.empty());
        continue;
      }
      REQUIRE(rows.size() == n - 6);
      CHECK(rows.front().hours_since_formation == 9.0);
      for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].hours_since_formation - rows[i - 1].hours_since_formation == 3.0);
        CHECK(rows[i].actual_hours == rows[i - 1].actual_hours - 3.0);
      }
      CHECK(rows.back().actual_hours >= 12.0);
      for (const TraceRow& r : rows) {
        CHECK(r.actual == uf.unit.landfall.position);
        CHECK(r.distance_error_km == doctest::Approx(haversine_km(r.predicted, r.actual)));
      }
    }
    std::ostringstream csv;
    write_trace_csv(csv, trace_cyclone(loc, data.stats(), hrs, data.stats(), ds.units.front()));
    CHECK(csv.str().rfind("t_end,hours_since_formation,pred_lat,pred_lon,pred_hours,", 0) == 0);
    CHECK_THROWS_AS(trace_cyclone(hrs, data.stats(), loc, data.stats(), ds.units.front()), UsageError);
  }

  TEST_CASE("history table") {
    TrainHistory h;
    h.train_mse = {0.5, 0.25};
    h.val_mse = {0.75, 0.5};
    std::ostringstream out;
    write_history_csv(out, h);
    CHECK(out.str() == "epoch,train_mse,val_mse\n1,0.5,0.75\n2,0.25,0.5\n");
  }
}
