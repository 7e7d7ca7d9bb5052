#pragma once

#include <array>
#include <span>
#include <vector>

#include "tclf/dataset.hpp"

namespace tclf {

/// Standard-scaling statistics fitted on a training bucket.
struct ScalerStats {
  std::array<double, kFrameChannels> mean{};
  std::array<double, kFrameChannels> stddev{};   // population; 1 for constant channels
  std::array<bool, kFrameChannels> constant{};   // zero variance: scaled output is 0
  std::array<double, 2> target_mean{};           // landfall lat, lon
  std::array<double, 2> target_stddev{1.0, 1.0};
  bool scale_positions = true;  // false leaves the lats/longs channels raw

  bool passes_through(std::size_t channel) const {
    return !scale_positions && channel < 2;
  }

  double apply(std::size_t channel, double x) const;
  double invert(std::size_t channel, double z) const;

  /// Scales one 12x33x33 frame.
  void apply_frame(std::span<const float> frame, std::span<double> out) const;

  double scale_target(std::size_t axis, double value) const {
    return (value - target_mean[axis]) / target_stddev[axis];
  }
  double unscale_target(std::size_t axis, double value) const {
    return value * target_stddev[axis] + target_mean[axis];
  }

  friend bool operator==(const ScalerStats&, const ScalerStats&) = default;
};

/// Channel statistics over every distinct frame referenced by the given
/// samples; target statistics over the samples themselves. Hours-to-landfall
/// targets are never scaled. UsageError on an empty sample list.
ScalerStats fit_scaler(const PreparedDataset& ds, std::span<const std::size_t> samples,
                       bool scale_positions = true);

/// Scaled frames of every unit, indexed like `ds.units`; units not listed in
/// `units_needed` are left empty.
std::vector<std::vector<double>> scale_unit_frames(const PreparedDataset& ds,
                                                   const ScalerStats& stats,
                                                   std::span<const std::size_t> units_needed);

}  // namespace tclf
