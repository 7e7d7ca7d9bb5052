#include "tclf/fields.hpp"

#include <cmath>
#include <fstream>

#include "tclf/binary_io.hpp"
#include "tclf/error.hpp"

namespace tclf {

namespace {

constexpr std::uint32_t kMaxRecordSnapshots = 1u << 16;

}  // namespace

void fill_missing_sst(FieldSnapshot& snapshot) {
  double sum = 0.0;
  std::size_t count = 0;
  for (float v : snapshot.channel(kSst)) {
    if (std::isfinite(v)) {
      sum += v;
      ++count;
    }
  }
  if (count == 0) throw FormatError("snapshot has no finite SST cell to fill from");
  const float mean = static_cast<float>(sum / static_cast<double>(count));
  float* sst = snapshot.values.data() + kSst * kGridCells;
  for (std::size_t i = 0; i < kGridCells; ++i) {
    if (!std::isfinite(sst[i])) sst[i] = mean;
  }
}

FieldArchive FieldArchive::read(std::istream& in) {
  FieldArchive archive;
  binary::Reader r(in, "field archive");
  while (!r.at_eof()) {
    r.expect_magic("TCLF");
    const std::uint32_t version = r.u32();
    if (version != kFieldArchiveVersion) {
      r.fail("unsupported version " + std::to_string(version));
    }
    std::string id = r.string(4096);
    const std::uint32_t n_time = r.u32();
    const std::uint32_t channels = r.u32();
    const std::uint32_t height = r.u32();
    const std::uint32_t width = r.u32();
    if (channels != kFieldChannels || height != kGridSize || width != kGridSize) {
      r.fail("record " + id + " has dims " + std::to_string(channels) + "x" +
             std::to_string(height) + "x" + std::to_string(width) + ", expected 10x33x33");
    }
    if (n_time > kMaxRecordSnapshots) {
      r.fail("record " + id + " claims " + std::to_string(n_time) + " snapshots");
    }
    if (archive.contains(id)) r.fail("duplicate record " + id);
    std::vector<FieldSnapshot> snaps(n_time);
    for (FieldSnapshot& s : snaps) r.f32_array(s.values);
    archive.records_.emplace(std::move(id), std::move(snaps));
  }
  return archive;
}

FieldArchive FieldArchive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open field archive " + path.string());
  return read(in);
}

void FieldArchive::write(std::ostream& out) const {
  for (const auto& [id, snaps] : records_) {
    binary::write_magic(out, "TCLF");
    binary::write_u32(out, kFieldArchiveVersion);
    binary::write_string(out, id);
    binary::write_u32(out, static_cast<std::uint32_t>(snaps.size()));
    binary::write_u32(out, kFieldChannels);
    binary::write_u32(out, kGridSize);
    binary::write_u32(out, kGridSize);
    for (const FieldSnapshot& s : snaps) binary::write_f32_array(out, s.values);
  }
}

void FieldArchive::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFoundError("cannot create field archive " + path.string());
  write(out);
  out.flush();
  if (!out) throw FormatError("failed writing field archive " + path.string());
}

const std::vector<FieldSnapshot>& FieldArchive::get(const std::string& id) const {
  const auto it = records_.find(id);
  if (it == records_.end()) throw NotFoundError("field archive has no record for unit " + id);
  return it->second;
}

void FieldArchive::put(const std::string& id, std::vector<FieldSnapshot> snapshots) {
  for (const FieldSnapshot& s : snapshots) {
    if (s.values.size() != kSnapshotValues) {
      throw ShapeError("snapshot for " + id + " has " + std::to_string(s.values.size()) +
                       " values, expected " + std::to_string(kSnapshotValues));
    }
  }
  records_[id] = std::move(snapshots);
}

std::vector<std::string> FieldArchive::ids() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& kv : records_) out.push_back(kv.first);
  return out;
}

const std::vector<FieldSnapshot>& read_fields(const FieldArchive& archive,
                                              const CycloneUnit& unit) {
  const auto& snaps = archive.get(unit.id);
  if (snaps.size() != unit.ocean_count()) {
    throw FormatError("unit " + unit.id + " has " + std::to_string(unit.ocean_count()) +
                      " ocean points but " + std::to_string(snaps.size()) + " field snapshots");
  }
  return snaps;
}

void write_fields(FieldArchive& archive, const CycloneUnit& unit,
                  std::vector<FieldSnapshot> snapshots) {
  if (snapshots.size() != unit.ocean_count()) {
    throw FormatError("unit " + unit.id + " has " + std::to_string(unit.ocean_count()) +
                      " ocean points but " + std::to_string(snapshots.size()) +
                      " snapshots were supplied");
  }
  for (const FieldSnapshot& s : snapshots) {
    for (float v : s.values) {
      if (!std::isfinite(v)) throw FormatError("non-finite field value for unit " + unit.id);
    }
  }
  archive.put(unit.id, std::move(snapshots));
}

}  // namespace tclf
