#include "tclf/metrics.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "tclf/error.hpp"

namespace tclf {

namespace {

void check_pair(std::span<const double> y, std::span<const double> y_hat, const char* op) {
  if (y.size() != y_hat.size()) {
    throw ShapeError(std::string(op) + ": length mismatch " + std::to_string(y.size()) +
                     " vs " + std::to_string(y_hat.size()));
  }
  if (y.empty()) throw UsageError(std::string(op) + ": empty input");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("summary table: invalid number '" + s + "'");
  }
  return v;
}

}  // namespace

double mse(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, "mse");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return sum / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, "rmse");
  return std::sqrt(mse(y, y_hat));
}

double mae(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, "mae");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(y[i] - y_hat[i]);
  return sum / static_cast<double>(y.size());
}

const std::array<const char*, FoldMetrics::kFields>& FoldMetrics::names() {
  static const std::array<const char*, kFields> n = {
      "rmse_lat", "rmse_lon", "rmse_time", "mae_lat", "mae_lon", "mae_time",
      "mae_distance_km", "baseline_distance_km", "baseline_mae_time", "n_samples"};
  return n;
}

std::array<double, FoldMetrics::kFields> FoldMetrics::values() const {
  return {rmse_lat, rmse_lon, rmse_time, mae_lat, mae_lon, mae_time,
          mae_distance_km, baseline_distance_km, baseline_mae_time,
          static_cast<double>(n_samples)};
}

FoldMetrics FoldMetrics::from_values(const std::array<double, kFields>& v) {
  FoldMetrics m;
  m.rmse_lat = v[0];
  m.rmse_lon = v[1];
  m.rmse_time = v[2];
  m.mae_lat = v[3];
  m.mae_lon = v[4];
  m.mae_time = v[5];
  m.mae_distance_km = v[6];
  m.baseline_distance_km = v[7];
  m.baseline_mae_time = v[8];
  m.n_samples = static_cast<std::size_t>(std::llround(v[9]));
  return m;
}

MetricsReport MetricsReport::aggregate(std::string basin, std::size_t window,
                                       std::vector<FoldMetrics> folds) {
  if (folds.empty()) throw UsageError("cannot aggregate zero folds");
  MetricsReport r;
  r.basin = std::move(basin);
  r.window = window;
  r.fold_count = folds.size();
  const double n = static_cast<double>(folds.size());
  std::array<double, FoldMetrics::kFields> mean{}, var{};
  for (const FoldMetrics& f : folds) {
    const auto v = f.values();
    for (std::size_t i = 0; i < v.size(); ++i) mean[i] += v[i];
  }
  for (double& m : mean) m /= n;
  for (const FoldMetrics& f : folds) {
    const auto v = f.values();
    for (std::size_t i = 0; i < v.size(); ++i) var[i] += (v[i] - mean[i]) * (v[i] - mean[i]);
  }
  for (double& x : var) x = std::sqrt(x / n);
  r.mean = FoldMetrics::from_values(mean);
  r.mean.n_samples = 0;
  for (const FoldMetrics& f : folds) r.mean.n_samples += f.n_samples;
  r.stddev = FoldMetrics::from_values(var);
  r.stddev.n_samples = 0;
  r.folds = std::move(folds);
  return r;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_fold_csv(std::ostream& out, const MetricsReport& report) {
  out << "fold";
  for (const char* n : FoldMetrics::names()) out << ',' << n;
  out << '\n';
  for (std::size_t f = 0; f < report.folds.size(); ++f) {
    out << f;
    const auto v = report.folds[f].values();
    for (std::size_t i = 0; i + 1 < v.size(); ++i) out << ',' << format_double(v[i]);
    out << ',' << report.folds[f].n_samples << '\n';
  }
}

std::string summary_csv_header() {
  std::string h = "basin,T,folds";
  for (const char* n : FoldMetrics::names()) {
    if (std::string(n) == "n_samples") continue;
    h += std::string(",") + n + ",std_" + n;
  }
  return h + ",n_samples";
}

void write_summary_row(std::ostream& out, const MetricsReport& r) {
  out << r.basin << ',' << r.window << ',' << r.fold_count;
  const auto m = r.mean.values();
  const auto s = r.stddev.values();
  for (std::size_t i = 0; i + 1 < m.size(); ++i) {
    out << ',' << format_double(m[i]) << ',' << format_double(s[i]);
  }
  out << ',' << r.mean.n_samples << '\n';
}

std::vector<MetricsReport> read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != summary_csv_header()) {
    throw FormatError("summary table: unexpected header");
  }
  std::vector<MetricsReport> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    constexpr std::size_t kMetrics = FoldMetrics::kFields - 1;
    if (cells.size() != 3 + 2 * kMetrics + 1) {
      throw FormatError("summary table line " + std::to_string(line_no) +
                        ": wrong number of columns");
    }
    MetricsReport r;
    r.basin = cells[0];
    r.window = static_cast<std::size_t>(parse_double(cells[1]));
    r.fold_count = static_cast<std::size_t>(parse_double(cells[2]));
    std::array<double, FoldMetrics::kFields> m{}, s{};
    for (std::size_t i = 0; i < kMetrics; ++i) {
      m[i] = parse_double(cells[3 + 2 * i]);
      s[i] = parse_double(cells[4 + 2 * i]);
    }
    m[kMetrics] = parse_double(cells.back());
    r.mean = FoldMetrics::from_values(m);
    r.stddev = FoldMetrics::from_values(s);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace tclf
