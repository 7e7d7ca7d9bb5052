#include "tclf/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "tclf/checkpoint.hpp"
#include "tclf/dataset.hpp"
#include "tclf/error.hpp"
#include "tclf/fields.hpp"
#include "tclf/metrics.hpp"
#include "tclf/random.hpp"
#include "tclf/synth.hpp"
#include "tclf/tracks.hpp"
#include "tclf/train.hpp"

namespace tclf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
}

namespace {

fs::path resolve(const fs::path& p, const fs::path& base = {}) {
  if (p.empty()) return p;
  const fs::path joined = p.is_absolute() || base.empty() ? p : base / p;
  return fs::absolute(joined).lexically_normal();
}

template <typename T>
T get_as(const json& v, const char* key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config key '") + key + "' has the wrong type");
  }
}

std::string path_text(const fs::path& p) { return p.generic_string(); }

}  // namespace

void apply_config_json(RunConfig& c, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, v] : doc.items()) {
    const char* k = key.c_str();
    if (key == "basin") c.basin = get_as<std::string>(v, k);
    else if (key == "window_hours") c.window_hours = get_as<int>(v, k);
    else if (key == "target") c.target = get_as<std::string>(v, k);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, k);
    else if (key == "epochs") c.epochs = get_as<std::size_t>(v, k);
    else if (key == "learning_rate") c.learning_rate = get_as<double>(v, k);
    else if (key == "batch_size") c.batch_size = get_as<std::size_t>(v, k);
    else if (key == "split") c.split = get_as<std::string>(v, k);
    else if (key == "scale_positions") c.scale_positions = get_as<bool>(v, k);
    else if (key == "cyclones") c.cyclones = get_as<std::size_t>(v, k);
    else if (key == "partition") c.partition = get_as<std::size_t>(v, k);
    else if (key == "unit") c.unit = get_as<std::string>(v, k);
    else if (key == "tracks") c.tracks = get_as<std::string>(v, k);
    else if (key == "fields") c.fields = get_as<std::string>(v, k);
    else if (key == "dataset") c.dataset = get_as<std::string>(v, k);
    else if (key == "location_model") c.location_model = get_as<std::string>(v, k);
    else if (key == "time_model") c.time_model = get_as<std::string>(v, k);
    else if (key == "out") c.out = get_as<std::string>(v, k);
    else if (key == "inputs") {
      c.inputs.clear();
      for (const auto& s : get_as<std::vector<std::string>>(v, k)) c.inputs.emplace_back(s);
    } else if (key == "command" || key == "T") {
      // Present in echoed configs; informational only.
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
}

std::string config_json(const RunConfig& c, const std::string& command) {
  json doc;
  doc["command"] = command;
  doc["basin"] = c.basin ? json(*c.basin) : json(nullptr);
  doc["window_hours"] = c.window_hours ? json(*c.window_hours) : json(nullptr);
  doc["T"] = c.window_hours ? json(window_from_hours(*c.window_hours)) : json(nullptr);
  doc["target"] = c.target;
  doc["seed"] = c.seed;
  doc["epochs"] = c.epochs;
  doc["learning_rate"] = c.learning_rate;
  doc["batch_size"] = c.batch_size;
  doc["split"] = c.split;
  doc["scale_positions"] = c.scale_positions;
  doc["cyclones"] = c.cyclones;
  doc["partition"] = c.partition;
  doc["unit"] = c.unit;
  doc["tracks"] = path_text(c.tracks);
  doc["fields"] = path_text(c.fields);
  doc["dataset"] = path_text(c.dataset);
  doc["location_model"] = path_text(c.location_model);
  doc["time_model"] = path_text(c.time_model);
  json inputs = json::array();
  for (const auto& p : c.inputs) inputs.push_back(path_text(p));
  doc["inputs"] = inputs;
  doc["out"] = path_text(c.out);
  return doc.dump(2) + "\n";
}

namespace {

/// Files written by one command. Unless committed, everything registered is
/// deleted again, and the directory too if this command created it.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    if (dir_.empty()) throw UsageError("an output directory is required (--out)");
    std::error_code ec;
    if (fs::exists(dir_, ec)) {
      if (!fs::is_directory(dir_, ec)) {
        throw UsageError("output path " + dir_.string() + " is not a directory");
      }
    } else {
      fs::create_directories(dir_, ec);
      if (ec) throw NotFoundError("cannot create output directory " + dir_.string());
      created_ = true;
    }
  }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  ~OutputDir() {
    if (committed_) return;
    std::error_code ec;
    for (const fs::path& f : files_) fs::remove(f, ec);
    if (created_) fs::remove(dir_, ec);
  }

  fs::path file(const std::string& name) {
    fs::path p = dir_ / name;
    files_.push_back(p);
    return p;
  }

  void write_text(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path p = file(name);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw NotFoundError("cannot create " + p.string());
    body(out);
    out.flush();
    if (!out) throw NotFoundError("failed writing " + p.string());
  }

  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool created_ = false;
  bool committed_ = false;
};

struct Context {
  RunConfig cfg;
  std::string command;
  std::ostream& out;
  std::ostream& err;
};

Basin basin_or(const RunConfig& c, Basin fallback) {
  return c.basin ? basin_from_string(*c.basin) : fallback;
}

std::size_t window_or(const RunConfig& c, std::size_t fallback) {
  return c.window_hours ? window_from_hours(*c.window_hours) : fallback;
}

TargetKind target_of(const RunConfig& c) { return target_kind_from_string(c.target); }

void require_path(const fs::path& p, const char* flag) {
  if (p.empty()) throw UsageError(std::string("missing required input ") + flag);
}

/// Checks explicit basin/window settings against what the data says.
void check_matches(const RunConfig& c, Basin basin, std::size_t window, const std::string& what) {
  if (c.basin && basin_from_string(*c.basin) != basin) {
    throw UsageError(what + " is for basin " + to_string(basin) + ", not " + *c.basin);
  }
  if (c.window_hours && window_from_hours(*c.window_hours) != window) {
    throw UsageError(what + " uses " + std::to_string(hours_from_window(window)) +
                     "-hour windows (T=" + std::to_string(window) + "), not " +
                     std::to_string(*c.window_hours));
  }
}

void echo_config(Context& ctx, OutputDir& dir) {
  dir.write_text("config.json", [&](std::ostream& o) { o << config_json(ctx.cfg, ctx.command); });
}

const char* bucket_name(Bucket b) {
  switch (b) {
    case Bucket::Train: return "train";
    case Bucket::Validation: return "validation";
    case Bucket::Test: return "test";
  }
  return "?";
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.epochs = c.epochs;
  t.lr = c.learning_rate;
  t.batch_size = c.batch_size;
  t.seed = c.seed;
  return t;
}

// ---------------------------------------------------------------- commands

void cmd_synth(Context& ctx) {
  RunConfig& c = ctx.cfg;
  const Basin basin = basin_or(c, Basin::NI);
  c.basin = to_string(basin);
  if (c.cyclones == 0) throw UsageError("--cyclones must be at least 1");
  OutputDir dir(c.out);
  const SynthBasin s = synthesize_basin(c.seed, c.cyclones, basin);
  dir.write_text("tracks.csv", [&](std::ostream& o) { write_tracks(o, s.tracks); });
  s.archive.save(dir.file("fields.tclf"));
  echo_config(ctx, dir);
  dir.commit();
  ctx.out << "synthesized " << s.tracks.size() << " cyclones in " << to_string(basin) << '\n';
}

void cmd_ingest(Context& ctx) {
  RunConfig& c = ctx.cfg;
  require_path(c.tracks, "--tracks");
  require_path(c.fields, "--fields");
  OutputDir dir(c.out);
  const std::vector<Track> tracks = parse_tracks_file(c.tracks);
  const std::vector<CycloneUnit> units = extract_cyclone_units(tracks);
  const FieldArchive raw = FieldArchive::load(c.fields);
  FieldArchive clean;
  for (const CycloneUnit& u : units) {
    if (!raw.contains(u.id)) throw NotFoundError("field archive has no record for unit " + u.id);
    std::vector<FieldSnapshot> snaps = raw.get(u.id);
    for (FieldSnapshot& s : snaps) fill_missing_sst(s);
    write_fields(clean, u, std::move(snaps));
  }
  dir.write_text("tracks.csv", [&](std::ostream& o) { write_tracks(o, tracks); });
  clean.save(dir.file("fields.tclf"));
  dir.write_text("units.csv", [&](std::ostream& o) {
    o << "unit,sid,basin,ocean_points,formation_time,landfall_time,landfall_lat,landfall_lon\n";
    for (const CycloneUnit& u : units) {
      o << u.id << ',' << u.sid << ',' << to_string(u.basin) << ',' << u.ocean_count() << ','
        << format_iso_time(u.ocean_points.front().time) << ','
        << format_iso_time(u.landfall_time()) << ',' << format_double(u.landfall.position.lat())
        << ',' << format_double(u.landfall.position.lon()) << '\n';
    }
  });
  echo_config(ctx, dir);
  dir.commit();
  ctx.out << "ingested " << tracks.size() << " tracks, " << units.size() << " cyclone units\n";
  if (raw.size() > clean.size()) {
    ctx.out << (raw.size() - clean.size()) << " field records match no cyclone unit\n";
  }
}

void cmd_prepare(Context& ctx) {
  RunConfig& c = ctx.cfg;
  require_path(c.tracks, "--tracks");
  require_path(c.fields, "--fields");
  const Basin basin = basin_or(c, Basin::NI);
  const std::size_t window = window_or(c, 8);
  const SplitMode mode = split_mode_from_string(c.split);
  c.basin = to_string(basin);
  c.window_hours = hours_from_window(window);
  OutputDir dir(c.out);
  const std::vector<CycloneUnit> units = extract_cyclone_units(parse_tracks_file(c.tracks));
  const FieldArchive archive = FieldArchive::load(c.fields);
  const PreparedDataset ds = prepare_dataset(units, archive, window, basin, mode, c.seed);
  ds.save(dir.file("dataset.tcld"));
  dir.write_text("split.csv", [&](std::ostream& o) {
    o << "partition,unit,bucket\n";
    for (std::size_t p = 0; p < ds.plan.partition_count(); ++p) {
      for (std::size_t u = 0; u < ds.units.size(); ++u) {
        o << p << ',' << ds.units[u].unit.id << ',' << bucket_name(ds.plan.partitions[p][u])
          << '\n';
      }
    }
  });
  dir.write_text("samples.csv", [&](std::ostream& o) {
    o << "unit,start,t_end,target_lat,target_lon,target_hours\n";
    for (const Sample& s : ds.samples) {
      o << ds.units[s.unit].unit.id << ',' << s.start << ',' << format_iso_time(s.t_end) << ','
        << format_double(s.target_location.lat()) << ','
        << format_double(s.target_location.lon()) << ',' << format_double(s.target_hours)
        << '\n';
    }
  });
  echo_config(ctx, dir);
  dir.commit();
  ctx.out << "prepared " << ds.samples.size() << " samples (T=" << window << ") from "
          << ds.units.size() << " units in " << to_string(basin) << ", " << ds.dropped
          << " windows dropped by the lead-time guard\n";
}

PreparedDataset load_dataset(RunConfig& c) {
  require_path(c.dataset, "--dataset");
  PreparedDataset ds = PreparedDataset::load(c.dataset);
  check_matches(c, ds.basin, ds.window, "dataset " + c.dataset.string());
  c.basin = to_string(ds.basin);
  c.window_hours = hours_from_window(ds.window);
  return ds;
}

void check_partition(const PreparedDataset& ds, std::size_t partition) {
  if (partition >= ds.plan.partition_count()) {
    throw UsageError("partition " + std::to_string(partition) + " does not exist; the " +
                     to_string(ds.plan.mode) + " split has " +
                     std::to_string(ds.plan.partition_count()));
  }
}

void cmd_train(Context& ctx) {
  RunConfig& c = ctx.cfg;
  const TargetKind kind = target_of(c);
  const PreparedDataset ds = load_dataset(c);
  check_partition(ds, c.partition);
  OutputDir dir(c.out);
  const auto train_idx = ds.samples_in(c.partition, Bucket::Train);
  const auto val_idx = ds.samples_in(c.partition, Bucket::Validation);
  if (train_idx.empty()) throw UsageError("the training bucket has no samples");
  std::vector<std::size_t> used = train_idx;
  used.insert(used.end(), val_idx.begin(), val_idx.end());
  const ScaledDataset data(ds, fit_scaler(ds, train_idx, c.scale_positions), used);
  Checkpoint ck{kind, ds.basin,
                LandfallModel(ModelConfig::for_target(kind, ds.window),
                              derive_seed(c.seed, std::string("init-") + to_string(kind))),
                data.stats()};
  const TrainHistory h = train(ck.model, data, kind, train_idx, val_idx, train_config(c));
  save_checkpoint(dir.file("model.tclm"), ck);
  dir.write_text("history.csv", [&](std::ostream& o) { write_history_csv(o, h); });
  echo_config(ctx, dir);
  dir.commit();
  ctx.out << "trained " << to_string(kind) << " model on " << train_idx.size()
          << " samples, final train mse " << format_double(h.train_mse.back());
  if (!h.val_mse.empty()) ctx.out << ", validation mse " << format_double(h.val_mse.back());
  ctx.out << '\n';
}

Checkpoint load_model(const fs::path& path, TargetKind expected, const char* flag) {
  require_path(path, flag);
  Checkpoint ck = load_checkpoint(path);
  if (ck.target != expected) {
    throw UsageError(path.string() + " holds a " + to_string(ck.target) + " model, " + flag +
                     " needs a " + to_string(expected) + " model");
  }
  return ck;
}

void write_report(OutputDir& dir, const MetricsReport& report) {
  dir.write_text("metrics.csv", [&](std::ostream& o) { write_fold_csv(o, report); });
  dir.write_text("summary.csv", [&](std::ostream& o) {
    o << summary_csv_header() << '\n';
    write_summary_row(o, report);
  });
}

void print_summary(std::ostream& out, const MetricsReport& r) {
  char line[256];
  std::snprintf(line, sizeof line,
                "%s T=%zu over %zu fold(s): distance %.2f km (persistence %.2f), "
                "time MAE %.2f h (baseline %.2f)\n",
                r.basin.c_str(), r.window, r.fold_count, r.mean.mae_distance_km,
                r.mean.baseline_distance_km, r.mean.mae_time, r.mean.baseline_mae_time);
  out << line;
}

void cmd_evaluate(Context& ctx) {
  RunConfig& c = ctx.cfg;
  const PreparedDataset ds = load_dataset(c);
  const bool with_models = !c.location_model.empty() || !c.time_model.empty();
  OutputDir dir(c.out);
  MetricsReport report;
  if (with_models) {
    Checkpoint loc = load_model(c.location_model, TargetKind::Location, "--location-model");
    Checkpoint hrs = load_model(c.time_model, TargetKind::Time, "--time-model");
    for (const Checkpoint* ck : {&loc, &hrs}) {
      if (ck->basin != ds.basin || ck->model.config().window != ds.window) {
        throw UsageError(std::string("the ") + to_string(ck->target) + " model was trained for " +
                         to_string(ck->basin) + " with T=" +
                         std::to_string(ck->model.config().window) + ", the dataset is " +
                         to_string(ds.basin) + " with T=" + std::to_string(ds.window));
      }
    }
    check_partition(ds, c.partition);
    const auto test_idx = ds.samples_in(c.partition, Bucket::Test);
    if (test_idx.empty()) throw UsageError("the test bucket has no samples");
    const ScaledDataset loc_data(ds, loc.stats, test_idx);
    const ScaledDataset hrs_data(ds, hrs.stats, test_idx);
    const auto locations = predict_locations(loc.model, loc_data, test_idx);
    const auto hours = predict_hours(hrs.model, hrs_data, test_idx);
    report = MetricsReport::aggregate(to_string(ds.basin), ds.window,
                                      {score_predictions(ds, test_idx, locations, hours)});
  } else {
    KFoldOptions opt;
    opt.train = train_config(c);
    opt.scale_positions = c.scale_positions;
    opt.log = [&](const std::string& line) { ctx.err << line << '\n'; };
    const KFoldResult result = evaluate_kfold(ds, opt);
    report = result.report;
    for (std::size_t f = 0; f < result.folds.size(); ++f) {
      const FoldOutcome& fo = result.folds[f];
      for (TargetKind kind : {TargetKind::Location, TargetKind::Time}) {
        const TrainHistory& h =
            kind == TargetKind::Location ? fo.location_history : fo.time_history;
        dir.write_text("history_fold" + std::to_string(f) + "_" + to_string(kind) + ".csv",
                       [&](std::ostream& o) { write_history_csv(o, h); });
      }
    }
  }
  write_report(dir, report);
  echo_config(ctx, dir);
  dir.commit();
  print_summary(ctx.out, report);
}

void cmd_predict(Context& ctx) {
  RunConfig& c = ctx.cfg;
  Checkpoint loc = load_model(c.location_model, TargetKind::Location, "--location-model");
  Checkpoint hrs = load_model(c.time_model, TargetKind::Time, "--time-model");
  const std::size_t window = loc.model.config().window;
  if (hrs.model.config().window != window || hrs.basin != loc.basin) {
    throw UsageError("the location and time models were trained for different basins or windows");
  }
  check_matches(c, loc.basin, window, "the models");
  require_path(c.tracks, "--tracks");
  require_path(c.fields, "--fields");
  const std::vector<Track> tracks = parse_tracks_file(c.tracks);
  if (tracks.size() != 1) {
    throw UsageError("the window file must hold exactly one storm, found " +
                     std::to_string(tracks.size()));
  }
  const Track& track = tracks.front();
  if (track.points.size() != window) {
    throw UsageError("the models expect a window of " + std::to_string(window) + " fixes (" +
                     std::to_string(hours_from_window(window)) + " hours), got " +
                     std::to_string(track.points.size()));
  }
  for (const TrackPoint& p : track.points) {
    if (p.over_land()) {
      throw UsageError("fix at " + format_iso_time(p.time) + " is over land; the window must be "
                       "entirely over the ocean");
    }
  }
  if (track.basin != loc.basin) {
    throw UsageError(std::string("storm is in ") + to_string(track.basin) +
                     ", the models were trained for " + to_string(loc.basin));
  }
  const FieldArchive archive = FieldArchive::load(c.fields);
  CycloneUnit unit{track.sid, track.sid, track.basin, track.points, track.points.back()};
  std::vector<FieldSnapshot> snaps = read_fields(archive, unit);
  for (FieldSnapshot& s : snaps) fill_missing_sst(s);
  FieldArchive validated;  // rejects non-finite values outside SST
  write_fields(validated, unit, snaps);
  const UnitFrames frames = build_unit_frames(unit, snaps);

  const std::vector<std::size_t> start{0};
  const Tensor yl = predict_unit_windows(loc.model, loc.stats, frames, start);
  const Tensor yt = predict_unit_windows(hrs.model, hrs.stats, frames, start);
  const double lat = std::clamp(loc.stats.unscale_target(0, yl.at(0, 0)), -90.0, 90.0);
  const double lon = normalize_lon(loc.stats.unscale_target(1, yl.at(0, 1)));
  const double hours = yt.at(0, 0);
  if (!std::isfinite(lat) || !std::isfinite(lon) || !std::isfinite(hours)) {
    throw NumericError("model produced a non-finite prediction");
  }
  const Timestamp t_end = track.points.back().time;
  const Timestamp landfall = t_end + static_cast<Timestamp>(std::llround(hours * 3600.0));
  std::ostringstream row;
  row << "sid,t_end,pred_lat,pred_lon,pred_hours,pred_landfall_time\n"
      << track.sid << ',' << format_iso_time(t_end) << ',' << format_double(lat) << ','
      << format_double(lon) << ',' << format_double(hours) << ',' << format_iso_time(landfall)
      << '\n';
  if (!c.out.empty()) {
    OutputDir dir(c.out);
    dir.write_text("prediction.csv", [&](std::ostream& o) { o << row.str(); });
    echo_config(ctx, dir);
    dir.commit();
  }
  ctx.out << row.str();
}

void cmd_trace(Context& ctx) {
  RunConfig& c = ctx.cfg;
  const PreparedDataset ds = load_dataset(c);
  Checkpoint loc = load_model(c.location_model, TargetKind::Location, "--location-model");
  Checkpoint hrs = load_model(c.time_model, TargetKind::Time, "--time-model");
  for (const Checkpoint* ck : {&loc, &hrs}) {
    if (ck->model.config().window != ds.window) {
      throw UsageError(std::string("the ") + to_string(ck->target) + " model expects T=" +
                       std::to_string(ck->model.config().window) + ", the dataset has T=" +
                       std::to_string(ds.window));
    }
  }
  const UnitFrames* unit = nullptr;
  if (c.unit.empty()) {
    check_partition(ds, c.partition);
    const auto test_units = ds.plan.units_in(c.partition, Bucket::Test);
    if (test_units.empty()) throw UsageError("the test bucket has no units; pass --unit");
    unit = &ds.units[test_units.front()];
    c.unit = unit->unit.id;
  } else {
    for (const UnitFrames& u : ds.units) {
      if (u.unit.id == c.unit) unit = &u;
    }
    if (unit == nullptr) throw NotFoundError("dataset has no unit " + c.unit);
  }
  OutputDir dir(c.out);
  const auto rows = trace_cyclone(loc.model, loc.stats, hrs.model, hrs.stats, *unit);
  dir.write_text("trace.csv", [&](std::ostream& o) { write_trace_csv(o, rows); });
  echo_config(ctx, dir);
  dir.commit();
  ctx.out << "traced " << unit->unit.id << ": " << rows.size() << " rows\n";
}

void cmd_report(Context& ctx) {
  RunConfig& c = ctx.cfg;
  if (c.inputs.empty()) throw UsageError("report needs at least one summary.csv input");
  std::vector<MetricsReport> rows;
  for (const fs::path& p : c.inputs) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NotFoundError("cannot open summary " + p.string());
    for (MetricsReport& r : read_summary_csv(in)) rows.push_back(std::move(r));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsReport& a, const MetricsReport& b) {
    return std::tie(a.basin, a.window) < std::tie(b.basin, b.window);
  });
  OutputDir dir(c.out);
  dir.write_text("report.csv", [&](std::ostream& o) {
    o << summary_csv_header() << '\n';
    for (const MetricsReport& r : rows) write_summary_row(o, r);
  });
  echo_config(ctx, dir);
  dir.commit();
  for (const MetricsReport& r : rows) print_summary(ctx.out, r);
}

struct Flags {
  std::string config, basin, target, split, unit, tracks, fields, dataset, location_model,
      time_model, out, scale_positions;
  int window_hours = 0;
  std::uint64_t seed = 0;
  std::size_t epochs = 0, batch_size = 0, cyclones = 0, partition = 0;
  double lr = 0;
  std::vector<std::string> inputs;
};

bool given(CLI::App* sc, const std::string& name) {
  const CLI::Option* o = sc->get_option_no_throw(name);
  return o != nullptr && o->count() > 0;
}

/// Defaults, then the config file, then explicit flags.
RunConfig build_config(CLI::App* sc, const Flags& f) {
  RunConfig c;
  if (given(sc, "--config")) {
    const fs::path path = resolve(f.config);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open config " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    apply_config_json(c, text.str());
    const fs::path base = path.parent_path();
    for (fs::path* p : {&c.tracks, &c.fields, &c.dataset, &c.location_model, &c.time_model,
                        &c.out}) {
      *p = resolve(*p, base);
    }
    for (fs::path& p : c.inputs) p = resolve(p, base);
  }
  if (given(sc, "--basin")) c.basin = f.basin;
  if (given(sc, "--window-hours")) c.window_hours = f.window_hours;
  if (given(sc, "--target")) c.target = f.target;
  if (given(sc, "--seed")) c.seed = f.seed;
  if (given(sc, "--epochs")) c.epochs = f.epochs;
  if (given(sc, "--lr")) c.learning_rate = f.lr;
  if (given(sc, "--batch-size")) c.batch_size = f.batch_size;
  if (given(sc, "--split")) c.split = f.split;
  if (given(sc, "--scale-positions")) c.scale_positions = f.scale_positions == "true";
  if (given(sc, "--cyclones")) c.cyclones = f.cyclones;
  if (given(sc, "--partition")) c.partition = f.partition;
  if (given(sc, "--unit")) c.unit = f.unit;
  if (given(sc, "--tracks")) c.tracks = resolve(f.tracks);
  if (given(sc, "--fields")) c.fields = resolve(f.fields);
  if (given(sc, "--dataset")) c.dataset = resolve(f.dataset);
  if (given(sc, "--location-model")) c.location_model = resolve(f.location_model);
  if (given(sc, "--time-model")) c.time_model = resolve(f.time_model);
  if (given(sc, "--out")) c.out = resolve(f.out);
  if (given(sc, "inputs")) {
    c.inputs.clear();
    for (const auto& s : f.inputs) c.inputs.push_back(resolve(s));
  }
  // Validate enumerations up front so bad values fail before any work.
  if (c.basin) basin_from_string(*c.basin);
  if (c.window_hours) window_from_hours(*c.window_hours);
  target_kind_from_string(c.target);
  split_mode_from_string(c.split);
  if (c.batch_size == 0) throw UsageError("batch size must be positive");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw UsageError("learning rate must be a finite non-negative number");
  }
  return c;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int fail(std::ostream& err, const char* cls, const std::string& message, int code) {
  err << "error " << cls << ": " << one_line(message) << std::endl;
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tropical cyclone landfall forecaster", "tclf"};
  app.require_subcommand(1);
  Flags f;

  using Handler = void (*)(Context&);
  struct Command {
    const char* name;
    const char* help;
    Handler handler;
    std::vector<std::string> flags;
  };
  const std::vector<Command> commands = {
      {"synth", "Generate a synthetic basin: tracks.csv and fields.tclf", cmd_synth,
       {"basin", "cyclones"}},
      {"ingest", "Validate track and field files, fill missing SST", cmd_ingest,
       {"tracks", "fields"}},
      {"prepare", "Window cyclone units into a dataset and split plan", cmd_prepare,
       {"tracks", "fields", "basin", "window-hours", "split"}},
      {"train", "Train one model on a partition's training bucket", cmd_train,
       {"dataset", "basin", "window-hours", "target", "epochs", "lr", "batch-size", "partition",
        "scale-positions"}},
      {"evaluate", "Cross-validate, or score given checkpoints on a test bucket", cmd_evaluate,
       {"dataset", "basin", "window-hours", "epochs", "lr", "batch-size", "partition",
        "scale-positions", "location-model", "time-model"}},
      {"predict", "Predict landfall for one window of fixes and fields", cmd_predict,
       {"location-model", "time-model", "tracks", "fields", "basin", "window-hours"}},
      {"trace", "Per-time predictions along one cyclone", cmd_trace,
       {"dataset", "basin", "window-hours", "location-model", "time-model", "unit",
        "partition"}},
      {"report", "Merge summary tables into one report", cmd_report, {}},
  };

  std::map<CLI::App*, const Command*> by_app;
  for (const Command& cmd : commands) {
    CLI::App* sc = app.add_subcommand(cmd.name, cmd.help);
    by_app[sc] = &cmd;
    sc->add_option("--config", f.config, "JSON config file; flags override its values");
    sc->add_option("--seed", f.seed, "Seed for every random choice");
    sc->add_option("--out", f.out,
                   std::string(cmd.name) == "predict" ? "Optional output directory"
                                                      : "Output directory");
    for (const std::string& flag : cmd.flags) {
      const std::string name = "--" + flag;
      if (flag == "basin") sc->add_option(name, f.basin, "Basin code: NI SI EP SP WP NA");
      else if (flag == "window-hours") {
        sc->add_option(name, f.window_hours, "Input span in hours: 9, 15 or 21");
      } else if (flag == "target") sc->add_option(name, f.target, "location or time");
      else if (flag == "cyclones") sc->add_option(name, f.cyclones, "Number of storms");
      else if (flag == "split") sc->add_option(name, f.split, "kfold or holdout");
      else if (flag == "epochs") sc->add_option(name, f.epochs, "Training epochs");
      else if (flag == "lr") sc->add_option(name, f.lr, "Adam learning rate");
      else if (flag == "batch-size") sc->add_option(name, f.batch_size, "Mini-batch size");
      else if (flag == "partition") {
        sc->add_option(name, f.partition, "Split partition (fold) to use");
      } else if (flag == "scale-positions") {
        sc->add_option(name, f.scale_positions, "Standardize the lat/long channels")
            ->check(CLI::IsMember({"true", "false"}));
      } else if (flag == "unit") sc->add_option(name, f.unit, "Cyclone unit id");
      else if (flag == "tracks") sc->add_option(name, f.tracks, "Track CSV file");
      else if (flag == "fields") sc->add_option(name, f.fields, "Field archive");
      else if (flag == "dataset") sc->add_option(name, f.dataset, "Prepared dataset");
      else if (flag == "location-model") {
        sc->add_option(name, f.location_model, "Location checkpoint");
      } else if (flag == "time-model") sc->add_option(name, f.time_model, "Time checkpoint");
    }
    if (std::string(cmd.name) == "report") {
      sc->add_option("inputs", f.inputs, "summary.csv files to merge");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return fail(err, error_class_name(ErrorKind::Usage), e.what(),
                exit_code_for(ErrorKind::Usage));
  }

  CLI::App* sc = app.get_subcommands().front();
  try {
    Context ctx{build_config(sc, f), sc->get_name(), out, err};
    by_app.at(sc)->handler(ctx);
    return 0;
  } catch (const Error& e) {
    return fail(err, error_class_name(e.kind()), e.what(), exit_code_for(e.kind()));
  } catch (const fs::filesystem_error& e) {
    return fail(err, error_class_name(ErrorKind::NotFound), e.what(),
                exit_code_for(ErrorKind::NotFound));
  } catch (const std::bad_alloc&) {
    return fail(err, "internal_error", "out of memory", 1);
  } catch (const std::exception& e) {
    return fail(err, "internal_error", e.what(), 1);
  }
}

}  // namespace tclf::cli
