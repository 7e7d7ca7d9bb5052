#include "tclf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tclf/binary_io.hpp"
#include "tclf/error.hpp"
#include "tclf/random.hpp"

namespace tclf {

std::size_t window_from_hours(int hours) {
  switch (hours) {
    case 9: return 4;
    case 15: return 6;
    case 21: return 8;
  }
  throw UsageError("window hours must be 9, 15 or 21, got " + std::to_string(hours));
}

int hours_from_window(std::size_t window) {
  check_window(window);
  return static_cast<int>(3 * (window - 1));
}

void check_window(std::size_t window) {
  if (window != 4 && window != 6 && window != 8) {
    throw UsageError("window length must be 4, 6 or 8, got " + std::to_string(window));
  }
}

UnitFrames build_unit_frames(const CycloneUnit& unit, std::span<const FieldSnapshot> snapshots) {
  if (snapshots.size() != unit.ocean_count()) {
    throw FormatError("unit " + unit.id + " has " + std::to_string(unit.ocean_count()) +
                      " ocean points but " + std::to_string(snapshots.size()) + " snapshots");
  }
  UnitFrames out{unit, std::vector<float>(unit.ocean_count() * kFrameValues)};
  for (std::size_t k = 0; k < unit.ocean_count(); ++k) {
    float* dst = out.frames.data() + k * kFrameValues;
    const LatLonChannels ll = build_latlon_channels(unit.ocean_points[k].position);
    for (std::size_t i = 0; i < kGridCells; ++i) {
      dst[i] = static_cast<float>(ll.lats[i]);
      dst[kGridCells + i] = static_cast<float>(ll.longs[i]);
    }
    std::copy(snapshots[k].values.begin(), snapshots[k].values.end(), dst + 2 * kGridCells);
  }
  return out;
}

WindowResult window_unit(const CycloneUnit& unit, std::size_t window, std::size_t unit_index) {
  check_window(window);
  WindowResult out;
  const std::size_t n = unit.ocean_count();
  if (n < window + 3) return out;
  for (std::size_t start = 0; start + window + 2 < n; ++start) {
    const TrackPoint& last = unit.ocean_points[start + window - 1];
    const double hours = hours_between(last.time, unit.landfall_time());
    if (hours < kLeadTimeGuardHours) {
      ++out.dropped;
      continue;
    }
    out.samples.push_back(Sample{unit_index, start, last.time, unit.landfall.position, hours});
  }
  return out;
}

const char* to_string(SplitMode mode) { return mode == SplitMode::Holdout ? "holdout" : "kfold"; }

SplitMode split_mode_from_string(std::string_view text) {
  if (text == "holdout") return SplitMode::Holdout;
  if (text == "kfold") return SplitMode::KFold;
  throw UsageError("split mode must be holdout or kfold, got '" + std::string(text) + "'");
}

std::vector<std::size_t> SplitPlan::units_in(std::size_t partition, Bucket bucket) const {
  std::vector<std::size_t> out;
  const auto& assignment = partitions.at(partition);
  for (std::size_t u = 0; u < assignment.size(); ++u) {
    if (assignment[u] == bucket) out.push_back(u);
  }
  return out;
}

namespace {

std::size_t round_share(std::size_t n, double share) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * share));
}

}  // namespace

SplitPlan make_split(std::size_t n_units, SplitMode mode, std::uint64_t seed) {
  std::vector<std::size_t> order(n_units);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(std::span<std::size_t>(order));

  SplitPlan plan;
  plan.mode = mode;
  if (mode == SplitMode::Holdout) {
    const std::size_t n_train = round_share(n_units, 0.6);
    const std::size_t n_val = round_share(n_units, 0.2);
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n_units) {
      throw UsageError("holdout split needs at least 4 cyclone units, got " +
                       std::to_string(n_units));
    }
    std::vector<Bucket> assignment(n_units, Bucket::Test);
    for (std::size_t p = 0; p < n_units; ++p) {
      assignment[order[p]] = p < n_train ? Bucket::Train
                             : p < n_train + n_val ? Bucket::Validation
                                                   : Bucket::Test;
    }
    plan.partitions.push_back(std::move(assignment));
    return plan;
  }

  if (n_units < kFolds) {
    throw UsageError("k-fold split needs at least 5 cyclone units, got " +
                     std::to_string(n_units));
  }
  for (std::size_t f = 0; f < kFolds; ++f) {
    std::vector<Bucket> assignment(n_units, Bucket::Train);
    std::vector<std::size_t> rest;
    for (std::size_t p = 0; p < n_units; ++p) {
      if (p % kFolds == f) {
        assignment[order[p]] = Bucket::Test;
      } else {
        rest.push_back(order[p]);
      }
    }
    Rng fold_rng(derive_seed(seed, "split-validation", f));
    fold_rng.shuffle(std::span<std::size_t>(rest));
    const std::size_t n_val = std::max<std::size_t>(1, round_share(rest.size(), 0.25));
    for (std::size_t r = 0; r < n_val; ++r) assignment[rest[r]] = Bucket::Validation;
    plan.partitions.push_back(std::move(assignment));
  }
  return plan;
}

Tensor PreparedDataset::window_tensor(const Sample& sample) const {
  const UnitFrames& uf = units.at(sample.unit);
  if (sample.start + window > uf.unit.ocean_count()) {
    throw ShapeError("sample window exceeds unit " + uf.unit.id);
  }
  Tensor out({window, kFrameChannels, static_cast<std::size_t>(kGridSize),
              static_cast<std::size_t>(kGridSize)});
  const float* src = uf.frames.data() + sample.start * kFrameValues;
  std::copy(src, src + window * kFrameValues, out.ptr());
  return out;
}

std::vector<std::size_t> PreparedDataset::samples_of_units(
    std::span<const std::size_t> unit_indices) const {
  std::vector<bool> wanted(units.size(), false);
  for (std::size_t u : unit_indices) wanted.at(u) = true;
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    if (wanted[samples[s].unit]) out.push_back(s);
  }
  return out;
}

std::vector<std::size_t> PreparedDataset::samples_in(std::size_t partition, Bucket bucket) const {
  const auto unit_list = plan.units_in(partition, bucket);
  return samples_of_units(unit_list);
}

namespace {

void write_point(std::ostream& out, const TrackPoint& p) {
  binary::write_i64(out, p.time);
  binary::write_f64(out, p.position.lat());
  binary::write_f64(out, p.position.lon());
  binary::write_f64(out, p.dist_to_land_km);
}

TrackPoint read_point(binary::Reader& r) {
  TrackPoint p;
  p.time = r.i64();
  const double lat = r.f64();
  const double lon = r.f64();
  try {
    p.position = GeoPoint(lat, lon);
  } catch (const FormatError& e) {
    r.fail(e.what());
  }
  p.dist_to_land_km = r.f64();
  return p;
}

constexpr std::uint32_t kMaxCount = 1u << 24;

}  // namespace

void PreparedDataset::write(std::ostream& out) const {
  binary::write_magic(out, "TCLD");
  binary::write_u32(out, kDatasetVersion);
  binary::write_u32(out, static_cast<std::uint32_t>(window));
  binary::write_string(out, to_string(basin));
  binary::write_u32(out, static_cast<std::uint32_t>(dropped));
  binary::write_u32(out, static_cast<std::uint32_t>(units.size()));
  for (const UnitFrames& uf : units) {
    binary::write_string(out, uf.unit.id);
    binary::write_string(out, uf.unit.sid);
    binary::write_u32(out, static_cast<std::uint32_t>(uf.unit.ocean_count()));
    for (const TrackPoint& p : uf.unit.ocean_points) write_point(out, p);
    write_point(out, uf.unit.landfall);
    binary::write_f32_array(out, uf.frames);
  }
  binary::write_u32(out, static_cast<std::uint32_t>(samples.size()));
  for (const Sample& s : samples) {
    binary::write_u32(out, static_cast<std::uint32_t>(s.unit));
    binary::write_u32(out, static_cast<std::uint32_t>(s.start));
    binary::write_i64(out, s.t_end);
    binary::write_f64(out, s.target_location.lat());
    binary::write_f64(out, s.target_location.lon());
    binary::write_f64(out, s.target_hours);
  }
  binary::write_u8(out, plan.mode == SplitMode::Holdout ? 0 : 1);
  binary::write_u32(out, static_cast<std::uint32_t>(plan.partitions.size()));
  for (const auto& assignment : plan.partitions) {
    for (Bucket b : assignment) binary::write_u8(out, static_cast<std::uint8_t>(b));
  }
}

PreparedDataset PreparedDataset::read(std::istream& in) {
  binary::Reader r(in, "prepared dataset");
  r.expect_magic("TCLD");
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion) r.fail("unsupported version " + std::to_string(version));
  PreparedDataset ds;
  ds.window = r.u32();
  if (ds.window != 4 && ds.window != 6 && ds.window != 8) {
    r.fail("invalid window length " + std::to_string(ds.window));
  }
  try {
    ds.basin = basin_from_string(r.string(16));
  } catch (const FormatError& e) {
    r.fail(e.what());
  }
  ds.dropped = r.u32();
  const std::uint32_t n_units = r.u32();
  if (n_units > kMaxCount) r.fail("implausible unit count");
  ds.units.reserve(n_units);
  for (std::uint32_t u = 0; u < n_units; ++u) {
    UnitFrames uf;
    uf.unit.id = r.string(4096);
    uf.unit.sid = r.string(4096);
    uf.unit.basin = ds.basin;
    const std::uint32_t n_ocean = r.u32();
    if (n_ocean == 0 || n_ocean > (1u << 16)) r.fail("implausible ocean point count");
    uf.unit.ocean_points.resize(n_ocean);
    for (TrackPoint& p : uf.unit.ocean_points) p = read_point(r);
    uf.unit.landfall = read_point(r);
    uf.frames.resize(static_cast<std::size_t>(n_ocean) * kFrameValues);
    r.f32_array(uf.frames);
    ds.units.push_back(std::move(uf));
  }
  const std::uint32_t n_samples = r.u32();
  if (n_samples > kMaxCount) r.fail("implausible sample count");
  ds.samples.resize(n_samples);
  for (Sample& s : ds.samples) {
    s.unit = r.u32();
    s.start = r.u32();
    s.t_end = r.i64();
    const double lat = r.f64();
    const double lon = r.f64();
    try {
      s.target_location = GeoPoint(lat, lon);
    } catch (const FormatError& e) {
      r.fail(e.what());
    }
    s.target_hours = r.f64();
    if (s.unit >= ds.units.size() ||
        s.start + ds.window > ds.units[s.unit].unit.ocean_count()) {
      r.fail("sample references frames outside its unit");
    }
  }
  const std::uint8_t mode = r.u8();
  if (mode > 1) r.fail("invalid split mode");
  ds.plan.mode = mode == 0 ? SplitMode::Holdout : SplitMode::KFold;
  const std::uint32_t n_parts = r.u32();
  if (n_parts > 64) r.fail("implausible partition count");
  ds.plan.partitions.assign(n_parts, std::vector<Bucket>(n_units));
  for (auto& assignment : ds.plan.partitions) {
    for (Bucket& b : assignment) {
      const std::uint8_t v = r.u8();
      if (v > 2) r.fail("invalid bucket code");
      b = static_cast<Bucket>(v);
    }
  }
  if (!r.at_eof()) r.fail("trailing bytes after split plan");
  return ds;
}

void PreparedDataset::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFoundError("cannot create dataset file " + path.string());
  write(out);
  out.flush();
  if (!out) throw FormatError("failed writing dataset file " + path.string());
}

PreparedDataset PreparedDataset::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open dataset file " + path.string());
  return read(in);
}

PreparedDataset prepare_dataset(std::span<const CycloneUnit> units, const FieldArchive& archive,
                                std::size_t window, Basin basin, SplitMode mode,
                                std::uint64_t seed) {
  check_window(window);
  std::vector<const CycloneUnit*> sorted;
  for (const CycloneUnit& u : units) {
    if (u.basin == basin) sorted.push_back(&u);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const CycloneUnit* a, const CycloneUnit* b) { return a->id < b->id; });

  PreparedDataset ds;
  ds.window = window;
  ds.basin = basin;
  for (const CycloneUnit* u : sorted) {
    const auto& snaps = read_fields(archive, *u);
    WindowResult w = window_unit(*u, window, ds.units.size());
    ds.dropped += w.dropped;
    ds.samples.insert(ds.samples.end(), w.samples.begin(), w.samples.end());
    ds.units.push_back(build_unit_frames(*u, snaps));
  }
  ds.plan = make_split(ds.units.size(), mode, seed);
  return ds;
}

}  // namespace tclf
