#include "tclf/checkpoint.hpp"

#include <fstream>
#include <json.hpp>

#include "tclf/binary_io.hpp"
#include "tclf/error.hpp"

namespace tclf {

namespace {

using nlohmann::json;

json descriptor(const Checkpoint& c) {
  const ModelConfig& cfg = c.model.config();
  json layers = json::array();
  for (const Parameter* p : c.model.parameters()) {
    layers.push_back({{"name", p->name}, {"shape", p->value.shape()}});
  }
  json channels = json::array();
  for (const char* name : kChannelOrder) channels.push_back(name);
  return {
      {"format", "tclf-checkpoint"},
      {"target", to_string(c.target)},
      {"basin", to_string(c.basin)},
      {"window", cfg.window},
      {"window_hours", 3 * (cfg.window - 1)},
      {"head_width", cfg.head_width},
      {"channels", channels},
      {"grid", cfg.grid},
      {"conv_filters", cfg.conv_filters},
      {"kernel", cfg.kernel},
      {"encoder_width", cfg.encoder_width},
      {"lstm_hidden", cfg.lstm_hidden},
      {"dense_width", cfg.dense_width},
      {"cell_activation", to_string(cfg.cell_activation)},
      {"parameters", layers},
  };
}

ModelConfig config_from(const json& d) {
  ModelConfig cfg;
  cfg.window = d.at("window").get<std::size_t>();
  cfg.head_width = d.at("head_width").get<std::size_t>();
  cfg.channels = d.at("channels").size();
  cfg.grid = d.at("grid").get<std::size_t>();
  cfg.conv_filters = d.at("conv_filters").get<std::vector<std::size_t>>();
  cfg.kernel = d.at("kernel").get<std::size_t>();
  cfg.encoder_width = d.at("encoder_width").get<std::size_t>();
  cfg.lstm_hidden = d.at("lstm_hidden").get<std::vector<std::size_t>>();
  cfg.dense_width = d.at("dense_width").get<std::size_t>();
  cfg.cell_activation = cell_activation_from_string(d.at("cell_activation").get<std::string>());
  return cfg;
}

}  // namespace

std::string describe_model(const Checkpoint& checkpoint) {
  return descriptor(checkpoint).dump();
}

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  binary::write_magic(out, "TCLM");
  binary::write_u32(out, kCheckpointVersion);
  binary::write_string(out, describe_model(c));
  const auto params = c.model.parameters();
  binary::write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    binary::write_string(out, p->name);
    binary::write_u32(out, static_cast<std::uint32_t>(p->value.ndim()));
    for (std::size_t d : p->value.shape()) binary::write_u32(out, static_cast<std::uint32_t>(d));
    binary::write_f64_array(out, p->value.data());
  }
  binary::write_f64_array(out, c.stats.mean);
  binary::write_f64_array(out, c.stats.stddev);
  for (bool b : c.stats.constant) binary::write_u8(out, b ? 1 : 0);
  binary::write_f64_array(out, c.stats.target_mean);
  binary::write_f64_array(out, c.stats.target_stddev);
  binary::write_u8(out, c.stats.scale_positions ? 1 : 0);
}

Checkpoint read_checkpoint(std::istream& in) {
  binary::Reader r(in, "checkpoint");
  r.expect_magic("TCLM");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version));
  const std::string text = r.string();
  json d;
  ModelConfig cfg;
  TargetKind target{};
  Basin basin{};
  try {
    d = json::parse(text);
    if (d.at("format") != "tclf-checkpoint") r.fail("descriptor has the wrong format tag");
    cfg = config_from(d);
    cfg.validate();
    target = target_kind_from_string(d.at("target").get<std::string>());
    basin = basin_from_string(d.at("basin").get<std::string>());
    std::vector<std::string> order;
    for (const char* name : kChannelOrder) order.emplace_back(name);
    if (d.at("channels").get<std::vector<std::string>>() != order) {
      r.fail("descriptor channel order differs from this build");
    }
  } catch (const json::exception& e) {
    r.fail(std::string("invalid descriptor: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DataFormat) throw;
    r.fail(std::string("invalid descriptor: ") + e.what());
  }
  if ((target == TargetKind::Location) != (cfg.head_width == 2)) {
    r.fail("head width does not match the target kind");
  }

  Checkpoint c{target, basin, LandfallModel(cfg, 0), ScalerStats{}};
  const auto params = c.model.parameters();
  if (r.u32() != params.size()) r.fail("parameter count differs from the descriptor");
  for (Parameter* p : params) {
    if (r.string(256) != p->name) r.fail("unexpected parameter name, expected " + p->name);
    const std::uint32_t ndim = r.u32();
    Shape shape(ndim);
    for (auto& dim : shape) dim = r.u32();
    if (shape != p->value.shape()) {
      r.fail("parameter " + p->name + " has shape " + shape_str(shape) + ", expected " +
             shape_str(p->value.shape()));
    }
    r.f64_array(p->value.data());
  }
  r.f64_array(c.stats.mean);
  r.f64_array(c.stats.stddev);
  for (bool& b : c.stats.constant) b = r.u8() != 0;
  r.f64_array(c.stats.target_mean);
  r.f64_array(c.stats.target_stddev);
  c.stats.scale_positions = r.u8() != 0;
  if (!r.at_eof()) r.fail("trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFoundError("cannot create checkpoint " + path.string());
  write_checkpoint(out, checkpoint);
  out.flush();
  if (!out) throw FormatError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace tclf
