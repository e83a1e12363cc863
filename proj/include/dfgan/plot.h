#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dfgan {

/// Columns of a CSV file keyed by header name. Empty cells become NaN.
struct CsvTable {
  std::vector<std::string> header;
  std::map<std::string, std::vector<double>> columns;
};

CsvTable read_csv_table(const std::filesystem::path& path);

struct PlotOptions {
  bool log_grad_norm = false;
  int width = 900;
  int panel_height = 240;
};

/// Three stacked panels against iter: loss_d and loss_g, hist_jsd, and
/// grad_norm_g. Throws ConfigError naming the first missing column.
std::string render_metrics_svg(const CsvTable& table, const PlotOptions& options);

void plot_metrics(const std::filesystem::path& csv, const std::filesystem::path& out,
                  const PlotOptions& options);

}  // namespace dfgan
