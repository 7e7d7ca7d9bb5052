#include "tclf/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "tclf/adam.hpp"
#include "tclf/error.hpp"
#include "tclf/random.hpp"

namespace tclf {

namespace {

constexpr std::size_t kEncodeChunk = 64;
constexpr std::size_t kHeadChunk = 256;

std::vector<std::size_t> units_of(const PreparedDataset& ds,
                                  std::span<const std::size_t> samples) {
  std::set<std::size_t> units;
  for (std::size_t s : samples) units.insert(ds.samples.at(s).unit);
  return {units.begin(), units.end()};
}

Shape frame_shape() {
  return {kFrameChannels, static_cast<std::size_t>(kGridSize),
          static_cast<std::size_t>(kGridSize)};
}

/// Encodes frames without recording gradients: [n, encoder_width].
Tensor encode_frames(LandfallModel& model, std::span<const std::span<const double>> frames) {
  const std::size_t width = model.config().encoder_width;
  Tensor out({frames.size(), width});
  for (std::size_t begin = 0; begin < frames.size(); begin += kEncodeChunk) {
    const std::size_t n = std::min(kEncodeChunk, frames.size() - begin);
    Tensor chunk({n, kFrameChannels, static_cast<std::size_t>(kGridSize),
                  static_cast<std::size_t>(kGridSize)});
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(frames[begin + i].begin(), frames[begin + i].end(),
                chunk.ptr() + i * kFrameValues);
    }
    Tape tape(false);
    const Var enc = model.encode(tape, tape.leaf(std::move(chunk)));
    std::copy(enc.value().ptr(), enc.value().ptr() + n * width, out.ptr() + begin * width);
  }
  return out;
}

/// Runs the recurrent head over windows given as rows of `features`:
/// window w uses rows index[w*T .. w*T+T-1]. Returns [n_windows, head_width].
Tensor run_heads(LandfallModel& model, const Tensor& features,
                 std::span<const std::size_t> index) {
  const std::size_t t_len = model.config().window;
  const std::size_t width = model.config().encoder_width;
  const std::size_t head = model.config().head_width;
  const std::size_t n_windows = index.size() / t_len;
  Tensor out({n_windows, head});
  for (std::size_t begin = 0; begin < n_windows; begin += kHeadChunk) {
    const std::size_t n = std::min(kHeadChunk, n_windows - begin);
    Tensor seq({n, t_len, width});
    for (std::size_t w = 0; w < n; ++w) {
      for (std::size_t t = 0; t < t_len; ++t) {
        const double* src = features.ptr() + index[(begin + w) * t_len + t] * width;
        std::copy(src, src + width, seq.ptr() + (w * t_len + t) * width);
      }
    }
    Tape tape(false);
    const Var y = model.sequence_head(tape, tape.leaf(std::move(seq)));
    std::copy(y.value().ptr(), y.value().ptr() + n * head, out.ptr() + begin * head);
  }
  return out;
}

void check_model_window(const LandfallModel& model, std::size_t window) {
  if (model.config().window != window) {
    throw UsageError("model expects windows of " + std::to_string(model.config().window) +
                     " frames (" + std::to_string(3 * (model.config().window - 1)) +
                     " hours), data has " + std::to_string(window));
  }
}

Parameter* find_parameter(LandfallModel& model, const std::string& name) {
  for (Parameter* p : model.parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

}  // namespace

void write_history_csv(std::ostream& out, const TrainHistory& history) {
  out << "epoch,train_mse,val_mse\n";
  for (std::size_t e = 0; e < history.train_mse.size(); ++e) {
    out << (e + 1) << ',' << format_double(history.train_mse[e]) << ',';
    if (e < history.val_mse.size()) out << format_double(history.val_mse[e]);
    out << '\n';
  }
}

ScaledDataset::ScaledDataset(const PreparedDataset& ds, ScalerStats stats,
                             std::span<const std::size_t> samples)
    : ds_(&ds), stats_(std::move(stats)) {
  const auto units = units_of(ds, samples);
  frames_ = scale_unit_frames(ds, stats_, units);
}

std::span<const double> ScaledDataset::frame(std::size_t unit, std::size_t k) const {
  const auto& f = frames_.at(unit);
  if (f.empty()) throw UsageError("unit " + ds_->units.at(unit).unit.id + " was not scaled");
  return std::span<const double>(f).subspan(k * kFrameValues, kFrameValues);
}

Tensor ScaledDataset::inputs(std::span<const std::size_t> samples) const {
  const std::size_t t_len = ds_->window;
  Shape shape = frame_shape();
  shape.insert(shape.begin(), {samples.size(), t_len});
  Tensor out(shape);
  double* dst = out.ptr();
  for (std::size_t idx : samples) {
    const Sample& s = ds_->samples.at(idx);
    for (std::size_t t = 0; t < t_len; ++t) {
      const auto f = frame(s.unit, s.start + t);
      dst = std::copy(f.begin(), f.end(), dst);
    }
  }
  return out;
}

Tensor ScaledDataset::targets(std::span<const std::size_t> samples, TargetKind kind) const {
  const std::size_t width = kind == TargetKind::Location ? 2 : 1;
  Tensor out({samples.size(), width});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = ds_->samples.at(samples[i]);
    if (kind == TargetKind::Location) {
      out.at(i, 0) = stats_.scale_target(0, s.target_location.lat());
      out.at(i, 1) = stats_.scale_target(1, s.target_location.lon());
    } else {
      out.at(i, 0) = s.target_hours;
    }
  }
  return out;
}

Tensor predict_scaled(LandfallModel& model, const ScaledDataset& data,
                      std::span<const std::size_t> samples) {
  const PreparedDataset& ds = data.dataset();
  check_model_window(model, ds.window);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> row_of;
  std::vector<std::span<const double>> frames;
  std::vector<std::size_t> index;
  index.reserve(samples.size() * ds.window);
  for (std::size_t idx : samples) {
    const Sample& s = ds.samples.at(idx);
    for (std::size_t t = 0; t < ds.window; ++t) {
      const auto key = std::make_pair(s.unit, s.start + t);
      auto [it, inserted] = row_of.emplace(key, frames.size());
      if (inserted) frames.push_back(data.frame(key.first, key.second));
      index.push_back(it->second);
    }
  }
  if (samples.empty()) return Tensor();
  const Tensor features = encode_frames(model, frames);
  return run_heads(model, features, index);
}

std::vector<GeoPoint> predict_locations(LandfallModel& model, const ScaledDataset& data,
                                        std::span<const std::size_t> samples) {
  if (model.config().head_width != 2) throw UsageError("not a location model");
  const Tensor y = predict_scaled(model, data, samples);
  std::vector<GeoPoint> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double lat = std::clamp(data.stats().unscale_target(0, y.at(i, 0)), -90.0, 90.0);
    out.emplace_back(lat, data.stats().unscale_target(1, y.at(i, 1)));
  }
  return out;
}

std::vector<double> predict_hours(LandfallModel& model, const ScaledDataset& data,
                                  std::span<const std::size_t> samples) {
  if (model.config().head_width != 1) throw UsageError("not a time model");
  const Tensor y = predict_scaled(model, data, samples);
  return std::vector<double>(y.ptr(), y.ptr() + y.size());
}

TrainHistory train(LandfallModel& model, const ScaledDataset& data, TargetKind kind,
                   std::span<const std::size_t> train_samples,
                   std::span<const std::size_t> val_samples, const TrainConfig& config) {
  if (train_samples.empty()) throw UsageError("training set is empty");
  if (config.batch_size == 0) throw UsageError("batch size must be positive");
  if (!(config.lr >= 0.0) || !std::isfinite(config.lr)) {
    throw UsageError("learning rate must be a finite non-negative number");
  }
  const std::size_t head = kind == TargetKind::Location ? 2 : 1;
  if (model.config().head_width != head) {
    throw UsageError(std::string("model head width does not match a ") + to_string(kind) +
                     " target");
  }
  check_model_window(model, data.dataset().window);

  if (kind == TargetKind::Time && config.init_time_bias) {
    const Tensor y = data.targets(train_samples, kind);
    const double mean = std::accumulate(y.ptr(), y.ptr() + y.size(), 0.0) /
                        static_cast<double>(y.size());
    if (Parameter* bias = find_parameter(model, "head.bias")) bias->value.fill(mean);
  }

  AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  Adam adam(model.parameters(), adam_cfg);
  adam.zero_grad();

  TrainHistory history;
  std::vector<std::size_t> order(train_samples.begin(), train_samples.end());
  const Tensor val_targets =
      val_samples.empty() ? Tensor() : data.targets(val_samples, kind);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, "epoch-shuffle", epoch));
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - begin);
      const std::span<const std::size_t> batch(order.data() + begin, n);
      Tape tape;
      const Var pred = model.forward(tape, tape.leaf(data.inputs(batch)));
      const Var diff = sub(pred, tape.leaf(data.targets(batch, kind)));
      const Var loss = reduce_mean(mul(diff, diff));
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw NumericError("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch + 1) + ", batch starting at " +
                           std::to_string(begin));
      }
      loss_sum += value * static_cast<double>(n);
      tape.backward(loss);
      adam.step();
      adam.zero_grad();
    }
    history.train_mse.push_back(loss_sum / static_cast<double>(order.size()));
    if (!val_samples.empty()) {
      const Tensor y = predict_scaled(model, data, val_samples);
      history.val_mse.push_back(mse(val_targets.data(), y.data()));
    }
  }
  return history;
}

GeoPoint persistence_location(const PreparedDataset& ds, const Sample& sample) {
  return ds.units.at(sample.unit).unit.ocean_points.at(sample.start + ds.window - 1).position;
}

double persistence_hours(const PreparedDataset& ds, const Sample& sample) {
  const auto& pts = ds.units.at(sample.unit).unit.ocean_points;
  const std::size_t e = sample.start + ds.window - 1;
  const double km = haversine_km(pts.at(e - 1).position, pts.at(e).position);
  const double speed_kmh = std::max(1.0, km / hours_between(pts[e - 1].time, pts[e].time));
  return pts[e].dist_to_land_km / speed_kmh;
}

FoldMetrics score_predictions(const PreparedDataset& ds, std::span<const std::size_t> samples,
                              std::span<const GeoPoint> locations,
                              std::span<const double> hours) {
  if (samples.empty()) throw UsageError("test set is empty");
  if (locations.size() != samples.size() || hours.size() != samples.size()) {
    throw ShapeError("prediction count does not match sample count");
  }
  const std::size_t n = samples.size();
  std::vector<double> lat(n), lon(n), t(n), plat(n), plon(n);
  std::vector<double> dist(n), zeros(n, 0.0), base_dist(n), base_t(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = ds.samples.at(samples[i]);
    lat[i] = s.target_location.lat();
    lon[i] = s.target_location.lon();
    t[i] = s.target_hours;
    plat[i] = locations[i].lat();
    // Compare longitudes on the same branch as the target.
    plon[i] = lon[i] + normalize_lon(locations[i].lon() - lon[i]);
    dist[i] = haversine_km(locations[i], s.target_location);
    base_dist[i] = haversine_km(persistence_location(ds, s), s.target_location);
    base_t[i] = persistence_hours(ds, s);
  }
  FoldMetrics m;
  m.n_samples = n;
  m.rmse_lat = rmse(lat, plat);
  m.rmse_lon = rmse(lon, plon);
  m.rmse_time = rmse(t, hours);
  m.mae_lat = mae(lat, plat);
  m.mae_lon = mae(lon, plon);
  m.mae_time = mae(t, hours);
  m.mae_distance_km = mae(dist, zeros);
  m.baseline_distance_km = mae(base_dist, zeros);
  m.baseline_mae_time = mae(t, base_t);
  return m;
}

FoldMetrics evaluate(LandfallModel& location_model, LandfallModel& time_model,
                     const ScaledDataset& data, std::span<const std::size_t> test_samples) {
  if (test_samples.empty()) throw UsageError("test set is empty");
  const auto locations = predict_locations(location_model, data, test_samples);
  const auto hours = predict_hours(time_model, data, test_samples);
  return score_predictions(data.dataset(), test_samples, locations, hours);
}

KFoldResult evaluate_kfold(const PreparedDataset& ds, const KFoldOptions& options) {
  if (ds.plan.partition_count() == 0) throw UsageError("dataset has no split plan");
  KFoldResult result;
  std::vector<FoldMetrics> metrics;
  for (std::size_t f = 0; f < ds.plan.partition_count(); ++f) {
    const auto train_idx = ds.samples_in(f, Bucket::Train);
    const auto val_idx = ds.samples_in(f, Bucket::Validation);
    const auto test_idx = ds.samples_in(f, Bucket::Test);
    if (train_idx.empty() || test_idx.empty()) {
      throw UsageError("partition " + std::to_string(f) + " has an empty train or test bucket");
    }
    std::vector<std::size_t> used = train_idx;
    used.insert(used.end(), val_idx.begin(), val_idx.end());
    used.insert(used.end(), test_idx.begin(), test_idx.end());
    const ScaledDataset data(ds, fit_scaler(ds, train_idx, options.scale_positions), used);

    FoldOutcome outcome;
    std::vector<LandfallModel> owned;
    owned.reserve(2);
    for (TargetKind kind : {TargetKind::Location, TargetKind::Time}) {
      ModelConfig cfg = options.model;
      cfg.window = ds.window;
      cfg.head_width = kind == TargetKind::Location ? 2 : 1;
      const std::string tag = std::string("fold-") + to_string(kind);
      owned.emplace_back(cfg, derive_seed(options.train.seed, tag + "-init", f));
      TrainConfig tc = options.train;
      tc.seed = derive_seed(options.train.seed, tag + "-shuffle", f);
      TrainHistory h = train(owned.back(), data, kind, train_idx, val_idx, tc);
      (kind == TargetKind::Location ? outcome.location_history : outcome.time_history) =
          std::move(h);
      if (options.log) {
        const auto& hist =
            kind == TargetKind::Location ? outcome.location_history : outcome.time_history;
        options.log("fold " + std::to_string(f) + " " + to_string(kind) + ": final train mse " +
                    (hist.train_mse.empty() ? std::string("-")
                                            : format_double(hist.train_mse.back())));
      }
    }
    outcome.metrics = evaluate(owned[0], owned[1], data, test_idx);
    metrics.push_back(outcome.metrics);
    result.folds.push_back(std::move(outcome));
  }
  result.report = MetricsReport::aggregate(to_string(ds.basin), ds.window, std::move(metrics));
  return result;
}

Tensor predict_unit_windows(LandfallModel& model, const ScalerStats& stats,
                            const UnitFrames& unit, std::span<const std::size_t> starts) {
  const std::size_t t_len = model.config().window;
  const std::size_t n_frames = unit.frames.size() / kFrameValues;
  for (std::size_t s : starts) {
    if (s + t_len > n_frames) {
      throw UsageError("window starting at frame " + std::to_string(s) + " needs " +
                       std::to_string(t_len) + " frames, unit " + unit.unit.id + " has " +
                       std::to_string(n_frames));
    }
  }
  std::vector<double> scaled(n_frames * kFrameValues);
  std::vector<std::span<const double>> frames;
  for (std::size_t k = 0; k < n_frames; ++k) {
    const std::span<double> dst(scaled.data() + k * kFrameValues, kFrameValues);
    stats.apply_frame(unit.frame(k), dst);
    frames.emplace_back(dst.data(), dst.size());
  }
  std::vector<std::size_t> index;
  for (std::size_t s : starts) {
    for (std::size_t t = 0; t < t_len; ++t) index.push_back(s + t);
  }
  return run_heads(model, encode_frames(model, frames), index);
}

std::vector<TraceRow> trace_cyclone(LandfallModel& location_model,
                                    const ScalerStats& location_stats,
                                    LandfallModel& time_model, const ScalerStats& time_stats,
                                    const UnitFrames& unit) {
  const std::size_t t_len = location_model.config().window;
  if (time_model.config().window != t_len) {
    throw UsageError("location and time models use different window lengths");
  }
  if (location_model.config().head_width != 2 || time_model.config().head_width != 1) {
    throw UsageError("trace needs a location model and a time model");
  }
  const WindowResult windows = window_unit(unit.unit, t_len);
  std::vector<TraceRow> rows;
  if (windows.samples.empty()) return rows;

  std::vector<std::size_t> starts;
  for (const Sample& s : windows.samples) starts.push_back(s.start);
  const Tensor loc = predict_unit_windows(location_model, location_stats, unit, starts);
  const Tensor hrs = predict_unit_windows(time_model, time_stats, unit, starts);

  const Timestamp formed = unit.unit.ocean_points.front().time;
  for (std::size_t w = 0; w < windows.samples.size(); ++w) {
    const Sample& s = windows.samples[w];
    TraceRow row;
    row.t_end = s.t_end;
    row.hours_since_formation = hours_between(formed, s.t_end);
    const double lat = std::clamp(location_stats.unscale_target(0, loc.at(w, 0)), -90.0, 90.0);
    row.predicted = GeoPoint(lat, location_stats.unscale_target(1, loc.at(w, 1)));
    row.predicted_hours = hrs.at(w, 0);
    row.actual = s.target_location;
    row.actual_hours = s.target_hours;
    row.distance_error_km = haversine_km(row.predicted, row.actual);
    rows.push_back(row);
  }
  return rows;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  out << "t_end,hours_since_formation,pred_lat,pred_lon,pred_hours,actual_lat,actual_lon,"
         "actual_hours,distance_error_km\n";
  for (const TraceRow& r : rows) {
    out << format_iso_time(r.t_end) << ',' << format_double(r.hours_since_formation) << ','
        << format_double(r.predicted.lat()) << ',' << format_double(r.predicted.lon()) << ','
        << format_double(r.predicted_hours) << ',' << format_double(r.actual.lat()) << ','
        << format_double(r.actual.lon()) << ',' << format_double(r.actual_hours) << ','
        << format_double(r.distance_error_km) << '\n';
  }
}

}  // namespace tclf
