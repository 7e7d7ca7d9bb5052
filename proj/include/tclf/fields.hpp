#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tclf/geo.hpp"
#include "tclf/tracks.hpp"

namespace tclf {

inline constexpr std::size_t kFieldChannels = 10;
inline constexpr std::size_t kGridCells = kGridSize * kGridSize;
inline constexpr std::size_t kSnapshotValues = kFieldChannels * kGridCells;
inline constexpr std::uint32_t kFieldArchiveVersion = 1;

/// Storage order of the ten atmospheric/ocean channels.
enum FieldChannel : std::size_t {
  kU225, kV225, kZ225, kU500, kV500, kZ500, kU700, kV700, kZ700, kSst
};

/// Ten 33x33 grids, channel-major then row-major. Units: m/s for u and v,
/// m^2/s^2 for z, kelvin for SST.
struct FieldSnapshot {
  std::vector<float> values = std::vector<float>(kSnapshotValues, 0.0f);

  float& at(std::size_t channel, std::size_t row, std::size_t col) {
    return values[channel * kGridCells + row * kGridSize + col];
  }
  float at(std::size_t channel, std::size_t row, std::size_t col) const {
    return values[channel * kGridCells + row * kGridSize + col];
  }
  std::span<const float> channel(std::size_t c) const {
    return std::span<const float>(values).subspan(c * kGridCells, kGridCells);
  }

  friend bool operator==(const FieldSnapshot&, const FieldSnapshot&) = default;
};

/// Replaces NaN SST cells with the mean of the finite SST cells. A grid with
/// no finite SST at all is a FormatError.
void fill_missing_sst(FieldSnapshot& snapshot);

/// Field sequences keyed by cyclone unit id. On disk, a sequence of records:
///   "TCLF" | version u32 | id (u32 length + bytes) | n_time u32 |
///   channels u32 = 10 | height u32 = 33 | width u32 = 33 |
///   n_time * 10 * 33 * 33 float32, time-major
/// All integers and floats little-endian. Records are written in id order.
class FieldArchive {
 public:
  static FieldArchive load(const std::filesystem::path& path);
  static FieldArchive read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  void write(std::ostream& out) const;

  bool contains(const std::string& id) const { return records_.count(id) != 0; }
  const std::vector<FieldSnapshot>& get(const std::string& id) const;
  void put(const std::string& id, std::vector<FieldSnapshot> snapshots);

  std::size_t size() const noexcept { return records_.size(); }
  std::vector<std::string> ids() const;

  friend bool operator==(const FieldArchive&, const FieldArchive&) = default;

 private:
  std::map<std::string, std::vector<FieldSnapshot>> records_;
};

/// Snapshots aligned with `unit.ocean_points`. NotFoundError if the unit is
/// absent, FormatError if the snapshot count differs from the ocean count.
const std::vector<FieldSnapshot>& read_fields(const FieldArchive& archive,
                                              const CycloneUnit& unit);

/// Stores snapshots for `unit`; the count must equal the ocean point count
/// and every value must be finite.
void write_fields(FieldArchive& archive, const CycloneUnit& unit,
                  std::vector<FieldSnapshot> snapshots);

}  // namespace tclf
