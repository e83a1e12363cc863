#include "dfgan/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "dfgan/errors.h"
#include "dfgan/theory.h"

namespace dfgan {

namespace {

std::vector<double> histogram(const RealMatrix& samples, std::size_t bins,
                              std::span<const HistogramRange> range, double smoothing) {
  const std::size_t dims = static_cast<std::size_t>(samples.cols());
  std::size_t cells = 1;
  for (std::size_t k = 0; k < dims; ++k) cells *= bins;
  std::vector<double> counts(cells, smoothing);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < dims; ++k) {
      const HistogramRange& r = range.size() == 1 ? range[0] : range[k];
      const double pos = (samples(i, static_cast<Eigen::Index>(k)) - r.lo) / (r.hi - r.lo) *
                         static_cast<double>(bins);
      long b = std::isfinite(pos) ? static_cast<long>(std::floor(pos)) : (pos > 0 ? 1L << 30 : -1);
      b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
      idx = idx * bins + static_cast<std::size_t>(b);
    }
    counts[idx] += 1.0;
  }
  double total = 0.0;
  for (double c : counts) total += c;
  for (double& c : counts) c /= total;
  return counts;
}

}  // namespace

double histogram_jsd(const RealMatrix& real, const RealMatrix& fake, std::size_t bins,
                     std::span<const HistogramRange> range, double smoothing) {
  if (real.rows() < 1 || fake.rows() < 1) {
    throw ConfigError("histogram_jsd: both sample sets must be non-empty");
  }
  if (real.cols() != fake.cols()) throw ConfigError("histogram_jsd: dimension mismatch");
  if (bins < 2) throw ConfigError("histogram_jsd: bins must be >= 2");
  if (!(smoothing >= 0.0)) throw ConfigError("histogram_jsd: smoothing must be >= 0");
  if (range.size() != 1 && range.size() != static_cast<std::size_t>(real.cols())) {
    throw ConfigError("histogram_jsd: need one range per dimension");
  }
  for (const auto& r : range) {
    if (!(r.hi > r.lo)) throw ConfigError("histogram_jsd: empty range");
  }
  std::vector<std::size_t> dims(static_cast<std::size_t>(real.cols()), bins);
  const TorusGrid grid(dims);
  const DiscretePdf p(grid, histogram(real, bins, range, smoothing), 1e-9);
  const DiscretePdf q(grid, histogram(fake, bins, range, smoothing), 1e-9);
  return jsd(p, q);
}

ModeCoverage mode_coverage(const RealMatrix& samples, const RealMatrix& centers, double mode_std,
                           std::size_t min_count) {
  if (centers.rows() < 1) throw ConfigError("mode_coverage: at least one center is required");
  if (samples.cols() != centers.cols()) throw ConfigError("mode_coverage: dimension mismatch");
  ModeCoverage out;
  if (samples.rows() == 0) return out;

  const double radius = 3.0 * mode_std;
  std::vector<std::size_t> counts(static_cast<std::size_t>(centers.rows()), 0);
  std::size_t hq = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    Eigen::Index best = 0;
    double best_d2 = (samples.row(i) - centers.row(0)).squaredNorm();
    for (Eigen::Index c = 1; c < centers.rows(); ++c) {
      const double d2 = (samples.row(i) - centers.row(c)).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = c;
      }
    }
    if (std::sqrt(best_d2) <= radius) {
      ++hq;
      ++counts[static_cast<std::size_t>(best)];
    }
  }
  for (std::size_t c : counts) {
    if (c >= min_count) ++out.covered;
  }
  out.hq_fraction = static_cast<double>(hq) / static_cast<double>(samples.rows());
  return out;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string to_csv_row(const MetricsRecord& r) {
  std::string row;
  row += std::to_string(r.iter) + ",";
  row += format_real(r.loss_d) + ",";
  row += format_real(r.loss_g) + ",";
  row += format_real(r.loss_eps) + ",";
  row += format_real(r.grad_norm_g) + ",";
  row += (r.sigma ? format_real(*r.sigma) : std::string()) + ",";
  row += format_real(r.hist_jsd) + ",";
  row += std::to_string(r.modes_covered) + ",";
  row += format_real(r.hq_fraction) + ",";
  row += r.wall_ms ? format_real(*r.wall_ms) : std::string();
  return row;
}

MetricsRecord parse_csv_row(const std::string& line) {
  std::vector<std::string> f;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) f.push_back(cell);
  if (!line.empty() && line.back() == ',') f.emplace_back();
  if (f.size() != 10) throw IoError("metrics row has " + std::to_string(f.size()) + " fields");
  try {
    MetricsRecord r;
    r.iter = std::stoull(f[0]);
    r.loss_d = std::stod(f[1]);
    r.loss_g = std::stod(f[2]);
    r.loss_eps = std::stod(f[3]);
    r.grad_norm_g = std::stod(f[4]);
    if (!f[5].empty()) r.sigma = std::stod(f[5]);
    r.hist_jsd = std::stod(f[6]);
    r.modes_covered = std::stoull(f[7]);
    r.hq_fraction = std::stod(f[8]);
    if (!f[9].empty()) r.wall_ms = std::stod(f[9]);
    return r;
  } catch (const std::logic_error& e) {
    throw IoError("malformed metrics row '" + line + "': " + e.what());
  }
}

CsvSink::CsvSink(std::filesystem::path path, bool append) : path_(std::move(path)) {
  if (append) {
    std::error_code ec;
    header_written_ = std::filesystem::exists(path_, ec) && std::filesystem::file_size(path_, ec) > 0;
  }
  out_.open(path_, append ? std::ios::app : std::ios::trunc);
  if (!out_) throw IoError("cannot open metrics file " + path_.string());
}

void CsvSink::emit(const MetricsRecord& record) {
  if (!header_written_) {
    out_ << kMetricsCsvHeader << '\n';
    header_written_ = true;
  }
  out_ << to_csv_row(record) << '\n';
  out_.flush();
  if (!out_) throw IoError("write failed for metrics file " + path_.string());
}

}  // namespace dfgan
