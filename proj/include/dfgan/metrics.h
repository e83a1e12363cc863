#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>

#include "dfgan/matrix.h"

namespace dfgan {

/// One row of per-evaluation telemetry.
struct MetricsRecord {
  std::size_t iter = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double loss_eps = 0.0;
  double grad_norm_g = 0.0;
  std::optional<double> sigma;
  double hist_jsd = 0.0;
  std::size_t modes_covered = 0;
  double hq_fraction = 0.0;
  std::optional<double> wall_ms;

  bool operator==(const MetricsRecord&) const = default;
};

inline constexpr const char* kMetricsCsvHeader =
    "iter,loss_d,loss_g,loss_eps,grad_norm_g,sigma,hist_jsd,modes_covered,hq_fraction,wall_ms";

struct HistogramRange {
  double lo = -4.0;
  double hi = 4.0;
  bool operator==(const HistogramRange&) const = default;
};

/// Bins both sample sets on the same grid (bins per axis; out-of-range values
/// land in the edge bins), adds `smoothing` to every cell, normalizes and
/// returns the Jensen-Shannon divergence in nats. `range` holds one entry per
/// column, or a single entry shared by all columns.
double histogram_jsd(const RealMatrix& real, const RealMatrix& fake, std::size_t bins,
                     std::span<const HistogramRange> range, double smoothing);

struct ModeCoverage {
  std::size_t covered = 0;
  double hq_fraction = 0.0;
};

/// A sample is high quality when its nearest center (ties to the lowest index)
/// is within 3 * mode_std; a mode is covered once min_count high-quality
/// samples are assigned to it.
ModeCoverage mode_coverage(const RealMatrix& samples, const RealMatrix& centers, double mode_std,
                           std::size_t min_count);

/// Shortest round-trip text for a double ("%.17g").
std::string format_real(double v);
std::string to_csv_row(const MetricsRecord& r);
/// Parses a data row produced by to_csv_row.
MetricsRecord parse_csv_row(const std::string& line);

/// Append-only CSV writer; writes the header once before the first row and
/// flushes after every row.
class CsvSink {
 public:
  /// With append=true an existing non-empty file keeps its header.
  explicit CsvSink(std::filesystem::path path, bool append = false);

  void emit(const MetricsRecord& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  bool header_written_ = false;
};

}  // namespace dfgan
