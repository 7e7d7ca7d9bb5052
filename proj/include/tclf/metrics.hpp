#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tclf {

// Errors: ShapeError on length mismatch, UsageError on empty input.
double mse(std::span<const double> y, std::span<const double> y_hat);
double rmse(std::span<const double> y, std::span<const double> y_hat);
double mae(std::span<const double> y, std::span<const double> y_hat);

/// Test-set scores of one fold (or one holdout run).
struct FoldMetrics {
  double rmse_lat = 0, rmse_lon = 0, rmse_time = 0;
  double mae_lat = 0, mae_lon = 0, mae_time = 0;
  double mae_distance_km = 0;
  double baseline_distance_km = 0;  // persistence: last observed position
  double baseline_mae_time = 0;     // distance to land over recent speed
  std::size_t n_samples = 0;

  static constexpr std::size_t kFields = 10;
  static const std::array<const char*, kFields>& names();
  std::array<double, kFields> values() const;
  static FoldMetrics from_values(const std::array<double, kFields>& v);
};

/// Mean and population standard deviation of fold scores. A single fold
/// reports zero spread.
struct MetricsReport {
  std::string basin;
  std::size_t window = 0;
  std::size_t fold_count = 0;
  std::vector<FoldMetrics> folds;  // empty when read back from a summary
  FoldMetrics mean;
  FoldMetrics stddev;

  static MetricsReport aggregate(std::string basin, std::size_t window,
                                 std::vector<FoldMetrics> folds);
};

/// "fold,<metric names...>" then one row per fold.
void write_fold_csv(std::ostream& out, const MetricsReport& report);

/// Summary header: basin,T,folds, then each metric followed by std_<metric>.
std::string summary_csv_header();
void write_summary_row(std::ostream& out, const MetricsReport& report);

/// Parses rows produced by write_summary_row (header included).
std::vector<MetricsReport> read_summary_csv(std::istream& in);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace tclf
