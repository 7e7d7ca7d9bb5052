#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tclf/fields.hpp"
#include "tclf/tensor.hpp"
#include "tclf/tracks.hpp"

namespace tclf {

inline constexpr std::size_t kFrameChannels = 12;
inline constexpr std::size_t kFrameValues = kFrameChannels * kGridCells;
inline constexpr double kLeadTimeGuardHours = 12.0;
inline constexpr std::uint32_t kDatasetVersion = 1;

/// Window length T for a supported window span of 9, 15 or 21 hours.
std::size_t window_from_hours(int hours);
int hours_from_window(std::size_t window);
/// UsageError unless T is 4, 6 or 8.
void check_window(std::size_t window);

/// 12-channel frames for every ocean point of a unit:
/// lats, longs, then the ten stored field channels.
struct UnitFrames {
  CycloneUnit unit;
  std::vector<float> frames;  // ocean_count * kFrameValues

  std::span<const float> frame(std::size_t k) const {
    return std::span<const float>(frames).subspan(k * kFrameValues, kFrameValues);
  }
};

UnitFrames build_unit_frames(const CycloneUnit& unit, std::span<const FieldSnapshot> snapshots);

/// One model input, stored by reference into its unit's frames.
struct Sample {
  std::size_t unit = 0;   // index into the owning unit list
  std::size_t start = 0;  // 0-based index of the first window point
  Timestamp t_end = 0;
  GeoPoint target_location;
  double target_hours = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct WindowResult {
  std::vector<Sample> samples;
  std::size_t dropped = 0;  // windows rejected by the 12 h lead-time guard
};

/// Windows of T consecutive ocean points starting at 1-based k = 1 .. T_L-T-2,
/// where T_L is the ocean point count. Windows ending less than 12 hours
/// before landfall are dropped and counted.
WindowResult window_unit(const CycloneUnit& unit, std::size_t window, std::size_t unit_index = 0);

enum class SplitMode { Holdout, KFold };
enum class Bucket : std::uint8_t { Train = 0, Validation = 1, Test = 2 };

const char* to_string(SplitMode mode);
SplitMode split_mode_from_string(std::string_view text);

inline constexpr std::size_t kFolds = 5;

/// Unit-level assignment to buckets. Holdout mode has one partition; k-fold
/// mode has five, where partition f tests the units of fold f.
struct SplitPlan {
  SplitMode mode = SplitMode::Holdout;
  std::vector<std::vector<Bucket>> partitions;  // [partition][unit]

  std::size_t partition_count() const noexcept { return partitions.size(); }
  std::size_t unit_count() const noexcept {
    return partitions.empty() ? 0 : partitions.front().size();
  }
  std::vector<std::size_t> units_in(std::size_t partition, Bucket bucket) const;

  friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

/// Holdout: 60/20/20 of the units (rounded). K-fold: five disjoint test
/// folds; the other units of each partition split 75/25 into train and
/// validation. UsageError when a bucket would be empty.
SplitPlan make_split(std::size_t n_units, SplitMode mode, std::uint64_t seed);

/// Windowed samples plus the frames they reference.
struct PreparedDataset {
  std::size_t window = 8;
  Basin basin = Basin::NI;
  std::vector<UnitFrames> units;  // sorted by unit id
  std::vector<Sample> samples;    // ordered by (unit id, start)
  SplitPlan plan;
  std::size_t dropped = 0;

  /// Unscaled [T,12,33,33] input of one sample.
  Tensor window_tensor(const Sample& sample) const;
  std::vector<std::size_t> samples_of_units(std::span<const std::size_t> unit_indices) const;
  std::vector<std::size_t> samples_in(std::size_t partition, Bucket bucket) const;

  /// Container layout, all little-endian:
  ///   "TCLD" | version u32 | T u32 | basin string | dropped u32 |
  ///   n_units u32 | per unit: id, sid, n_ocean u32,
  ///     (n_ocean + 1) x [time i64, lat f64, lon f64, dist f64] (last = landfall),
  ///     n_ocean * 12 * 33 * 33 float32 |
  ///   n_samples u32 | per sample: unit u32, start u32, t_end i64,
  ///     lat f64, lon f64, hours f64 |
  ///   split mode u8 | n_partitions u32 | n_partitions * n_units bucket u8
  void write(std::ostream& out) const;
  static PreparedDataset read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static PreparedDataset load(const std::filesystem::path& path);
};

/// Windows every unit of `basin`, in unit-id order. A unit missing from the
/// archive is a NotFoundError.
PreparedDataset prepare_dataset(std::span<const CycloneUnit> units, const FieldArchive& archive,
                                std::size_t window, Basin basin, SplitMode mode,
                                std::uint64_t seed);

}  // namespace tclf
