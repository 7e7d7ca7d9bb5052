#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tclf::cli {

/// Effective settings of one command. Built from defaults, then the JSON
/// config file, then command-line flags.
struct RunConfig {
  std::optional<std::string> basin;   // defaults to the dataset's, or NI
  std::optional<int> window_hours;    // 9, 15 or 21; defaults to the dataset's, or 21
  std::string target = "location";
  std::uint64_t seed = 0;
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::string split = "kfold";
  bool scale_positions = true;
  std::size_t cyclones = 40;
  std::size_t partition = 0;
  std::string unit;

  std::filesystem::path tracks;
  std::filesystem::path fields;
  std::filesystem::path dataset;
  std::filesystem::path location_model;
  std::filesystem::path time_model;
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out;
};

/// Applies the keys of a JSON config object onto `config`. Unknown keys and
/// wrongly typed values are a UsageError.
void apply_config_json(RunConfig& config, const std::string& json_text);

/// JSON echo of the effective config (sorted keys, no timestamps).
std::string config_json(const RunConfig& config, const std::string& command);

/// Runs the command line. Never throws: failures print one line
/// "error <class>: <message>" to `err` and return the mapped exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Keeps freed tape buffers in the heap between training steps.
void tune_allocator();

}  // namespace tclf::cli
