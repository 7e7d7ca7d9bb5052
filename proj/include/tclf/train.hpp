#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tclf/dataset.hpp"
#include "tclf/metrics.hpp"
#include "tclf/model.hpp"
#include "tclf/scaler.hpp"

namespace tclf {

struct TrainConfig {
  std::size_t epochs = 100;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  /// Start the time head's bias at the mean training target. Hours are not
  /// scaled, so without this the first few hundred steps only shift the bias.
  bool init_time_bias = true;
};

struct TrainHistory {
  std::vector<double> train_mse;  // per-sample mean over the epoch, pre-update weights
  std::vector<double> val_mse;    // after the epoch; empty when there is no validation set
};

void write_history_csv(std::ostream& out, const TrainHistory& history);

/// Scaled frames plus the statistics that produced them.
class ScaledDataset {
 public:
  /// Scales the frames of every unit that owns one of `samples`.
  ScaledDataset(const PreparedDataset& ds, ScalerStats stats,
                std::span<const std::size_t> samples);

  const PreparedDataset& dataset() const noexcept { return *ds_; }
  const ScalerStats& stats() const noexcept { return stats_; }

  /// [B, T, 12, 33, 33]
  Tensor inputs(std::span<const std::size_t> samples) const;
  /// [B, 2] scaled lat/lon, or [B, 1] raw hours.
  Tensor targets(std::span<const std::size_t> samples, TargetKind kind) const;
  std::span<const double> frame(std::size_t unit, std::size_t k) const;

 private:
  const PreparedDataset* ds_;
  ScalerStats stats_;
  std::vector<std::vector<double>> frames_;
};

/// Mini-batch Adam on MSE. The sample order is reshuffled every epoch from
/// `config.seed`. NumericError if the loss becomes non-finite.
TrainHistory train(LandfallModel& model, const ScaledDataset& data, TargetKind kind,
                   std::span<const std::size_t> train_samples,
                   std::span<const std::size_t> val_samples, const TrainConfig& config);

/// Raw model outputs in the scaled target space, [n, head_width]. Each
/// distinct frame is encoded once.
Tensor predict_scaled(LandfallModel& model, const ScaledDataset& data,
                      std::span<const std::size_t> samples);

std::vector<GeoPoint> predict_locations(LandfallModel& model, const ScaledDataset& data,
                                        std::span<const std::size_t> samples);
std::vector<double> predict_hours(LandfallModel& model, const ScaledDataset& data,
                                  std::span<const std::size_t> samples);

/// Scores predictions against the samples' targets. Also fills the
/// persistence baselines. Empty inputs are a UsageError.
FoldMetrics score_predictions(const PreparedDataset& ds, std::span<const std::size_t> samples,
                              std::span<const GeoPoint> locations,
                              std::span<const double> hours);

/// Last observed position of the sample's window.
GeoPoint persistence_location(const PreparedDataset& ds, const Sample& sample);
/// Distance to land of the last fix over the speed between the last two
/// fixes (floored at 1 km/h).
double persistence_hours(const PreparedDataset& ds, const Sample& sample);

FoldMetrics evaluate(LandfallModel& location_model, LandfallModel& time_model,
                     const ScaledDataset& data, std::span<const std::size_t> test_samples);

struct KFoldOptions {
  TrainConfig train;
  /// Architecture template; window and head width are set per model.
  ModelConfig model;
  bool scale_positions = true;
  std::function<void(const std::string&)> log;
};

struct FoldOutcome {
  FoldMetrics metrics;
  TrainHistory location_history;
  TrainHistory time_history;
};

struct KFoldResult {
  MetricsReport report;
  std::vector<FoldOutcome> folds;
};

/// Trains a location and a time model on every partition of the dataset's
/// split plan and scores each on its test bucket.
KFoldResult evaluate_kfold(const PreparedDataset& ds, const KFoldOptions& options);

struct TraceRow {
  Timestamp t_end = 0;
  double hours_since_formation = 0;
  GeoPoint predicted;
  double predicted_hours = 0;
  GeoPoint actual;
  double actual_hours = 0;
  double distance_error_km = 0;
};

/// Raw model outputs, [starts.size(), head_width], for the windows of
/// `unit` beginning at each of `starts`. Frames are scaled with `stats`.
Tensor predict_unit_windows(LandfallModel& model, const ScalerStats& stats,
                            const UnitFrames& unit, std::span<const std::size_t> starts);

/// Predictions for every admissible window end of one unit, in time order.
/// Each model scales its inputs with the statistics it was trained with.
std::vector<TraceRow> trace_cyclone(LandfallModel& location_model,
                                    const ScalerStats& location_stats,
                                    LandfallModel& time_model, const ScalerStats& time_stats,
                                    const UnitFrames& unit);

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);

}  // namespace tclf
