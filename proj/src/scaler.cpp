#include "tclf/scaler.hpp"

#include <cmath>
#include <set>
#include <utility>

#include "tclf/error.hpp"

namespace tclf {

double ScalerStats::apply(std::size_t c, double x) const {
  if (passes_through(c)) return x;
  if (constant[c]) return 0.0;
  return (x - mean[c]) / stddev[c];
}

double ScalerStats::invert(std::size_t c, double z) const {
  if (passes_through(c)) return z;
  if (constant[c]) return mean[c];
  return z * stddev[c] + mean[c];
}

void ScalerStats::apply_frame(std::span<const float> frame, std::span<double> out) const {
  if (frame.size() != kFrameValues || out.size() != kFrameValues) {
    throw ShapeError("apply_frame expects 12x33x33 values");
  }
  for (std::size_t c = 0; c < kFrameChannels; ++c) {
    const float* src = frame.data() + c * kGridCells;
    double* dst = out.data() + c * kGridCells;
    if (passes_through(c)) {
      for (std::size_t i = 0; i < kGridCells; ++i) dst[i] = src[i];
    } else if (constant[c]) {
      for (std::size_t i = 0; i < kGridCells; ++i) dst[i] = 0.0;
    } else {
      const double m = mean[c];
      const double s = stddev[c];
      for (std::size_t i = 0; i < kGridCells; ++i) dst[i] = (src[i] - m) / s;
    }
  }
}

ScalerStats fit_scaler(const PreparedDataset& ds, std::span<const std::size_t> samples,
                       bool scale_positions) {
  if (samples.empty()) throw UsageError("cannot fit a scaler on an empty training set");
  ScalerStats stats;
  stats.scale_positions = scale_positions;

  std::set<std::pair<std::size_t, std::size_t>> frames;  // (unit, point)
  for (std::size_t idx : samples) {
    const Sample& s = ds.samples.at(idx);
    for (std::size_t t = 0; t < ds.window; ++t) frames.emplace(s.unit, s.start + t);
  }

  // Two passes keep the variance accurate for large offsets such as z.
  const double n = static_cast<double>(frames.size() * kGridCells);
  std::array<double, kFrameChannels> sum{};
  for (const auto& [u, k] : frames) {
    const auto f = ds.units[u].frame(k);
    for (std::size_t c = 0; c < kFrameChannels; ++c) {
      for (std::size_t i = 0; i < kGridCells; ++i) sum[c] += f[c * kGridCells + i];
    }
  }
  for (std::size_t c = 0; c < kFrameChannels; ++c) stats.mean[c] = sum[c] / n;
  std::array<double, kFrameChannels> sq{};
  for (const auto& [u, k] : frames) {
    const auto f = ds.units[u].frame(k);
    for (std::size_t c = 0; c < kFrameChannels; ++c) {
      for (std::size_t i = 0; i < kGridCells; ++i) {
        const double d = f[c * kGridCells + i] - stats.mean[c];
        sq[c] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < kFrameChannels; ++c) {
    const double sd = std::sqrt(sq[c] / n);
    stats.constant[c] = !(sd > 0.0);
    stats.stddev[c] = stats.constant[c] ? 1.0 : sd;
  }

  const double m = static_cast<double>(samples.size());
  std::array<double, 2> tsum{};
  for (std::size_t idx : samples) {
    const GeoPoint& p = ds.samples[idx].target_location;
    tsum[0] += p.lat();
    tsum[1] += p.lon();
  }
  stats.target_mean = {tsum[0] / m, tsum[1] / m};
  std::array<double, 2> tsq{};
  for (std::size_t idx : samples) {
    const GeoPoint& p = ds.samples[idx].target_location;
    tsq[0] += (p.lat() - stats.target_mean[0]) * (p.lat() - stats.target_mean[0]);
    tsq[1] += (p.lon() - stats.target_mean[1]) * (p.lon() - stats.target_mean[1]);
  }
  for (std::size_t a = 0; a < 2; ++a) {
    const double sd = std::sqrt(tsq[a] / m);
    stats.target_stddev[a] = sd > 0.0 ? sd : 1.0;
  }
  return stats;
}

std::vector<std::vector<double>> scale_unit_frames(const PreparedDataset& ds,
                                                   const ScalerStats& stats,
                                                   std::span<const std::size_t> units_needed) {
  std::vector<std::vector<double>> out(ds.units.size());
  for (std::size_t u : units_needed) {
    if (!out.at(u).empty()) continue;
    const UnitFrames& uf = ds.units[u];
    out[u].resize(uf.frames.size());
    for (std::size_t k = 0; k < uf.unit.ocean_count(); ++k) {
      stats.apply_frame(uf.frame(k),
                        std::span<double>(out[u]).subspan(k * kFrameValues, kFrameValues));
    }
  }
  return out;
}

}  // namespace tclf
