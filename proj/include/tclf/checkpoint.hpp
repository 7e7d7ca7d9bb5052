#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "tclf/model.hpp"
#include "tclf/scaler.hpp"
#include "tclf/tracks.hpp"

namespace tclf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TargetKind target = TargetKind::Location;
  Basin basin = Basin::NI;
  LandfallModel model;
  ScalerStats stats;
};

/// Container layout, all little-endian:
///   "TCLM" | version u32 | descriptor (u32 length + JSON text) |
///   n_params u32 | per parameter: name, ndim u32, dims u32..., float64 data |
///   scaler: 12 mean f64, 12 stddev f64, 12 constant u8,
///           2 target mean f64, 2 target stddev f64, scale_positions u8
/// The descriptor lists the architecture, target, basin, channel order and
/// the parameter names and shapes in storage order.
void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Architecture descriptor as JSON text (keys sorted, compact).
std::string describe_model(const Checkpoint& checkpoint);

}  // namespace tclf
