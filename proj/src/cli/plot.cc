#include "dfgan/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "dfgan/errors.h"

namespace dfgan {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Series {
  std::string name;
  std::string color;
  const std::vector<double>* values;
};

struct Bounds {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

void panel(std::ostringstream& svg, const std::vector<double>& iters,
           const std::vector<Series>& series, const std::string& title, bool log_scale, int top,
           const PlotOptions& o) {
  const double left = 70.0;
  const double right = o.width - 20.0;
  const double ptop = top + 25.0;
  const double pbottom = top + o.panel_height - 30.0;
  auto transform = [&](double v) { return log_scale ? (v > 0.0 ? std::log10(v) : NAN) : v; };

  Bounds xb;
  Bounds yb;
  for (double x : iters) xb.add(x);
  for (const Series& s : series) {
    for (double v : *s.values) yb.add(transform(v));
  }
  xb.finish();
  yb.finish();
  auto px = [&](double x) { return left + (x - xb.lo) / (xb.hi - xb.lo) * (right - left); };
  auto py = [&](double y) { return pbottom - (y - yb.lo) / (yb.hi - yb.lo) * (pbottom - ptop); };

  svg << "<text x=\"" << left << "\" y=\"" << top + 16 << "\" font-size=\"14\">" << title
      << (log_scale ? " (log10)" : "") << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << ptop << "\" width=\"" << right - left
      << "\" height=\"" << pbottom - ptop << "\" fill=\"none\" stroke=\"#888\"/>\n";
  svg << "<text x=\"" << left - 6 << "\" y=\"" << ptop + 10
      << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(yb.hi) << "</text>\n";
  svg << "<text x=\"" << left - 6 << "\" y=\"" << pbottom
      << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(yb.lo) << "</text>\n";
  svg << "<text x=\"" << left << "\" y=\"" << pbottom + 16 << "\" font-size=\"11\">"
      << fmt(xb.lo) << "</text>\n";
  svg << "<text x=\"" << right << "\" y=\"" << pbottom + 16
      << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(xb.hi) << "</text>\n";

  double legend_x = right - 10.0;
  for (auto it = series.rbegin(); it != series.rend(); ++it) {
    svg << "<text x=\"" << legend_x << "\" y=\"" << top + 16
        << "\" font-size=\"12\" text-anchor=\"end\" fill=\"" << it->color << "\">" << it->name
        << "</text>\n";
    legend_x -= 12.0 + 7.0 * static_cast<double>(it->name.size());
  }

  for (const Series& s : series) {
    std::ostringstream pts;
    bool any = false;
    for (std::size_t i = 0; i < iters.size() && i < s.values->size(); ++i) {
      const double y = transform((*s.values)[i]);
      if (!std::isfinite(y) || !std::isfinite(iters[i])) continue;
      pts << (any ? " " : "") << px(iters[i]) << "," << py(y);
      any = true;
    }
    if (any) {
      svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\""
          << pts.str() << "\"/>\n";
    }
  }
}

}  // namespace

CsvTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read CSV file " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty CSV file");
  t.header = split(line);
  for (const auto& h : t.header) t.columns[h];
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ConfigError(path.string() + ": row " + std::to_string(row) + " has " +
                        std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(t.header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = std::numeric_limits<double>::quiet_NaN();
      if (!cells[c].empty()) {
        try {
          v = std::stod(cells[c]);
        } catch (const std::exception&) {
          throw ConfigError(path.string() + ": row " + std::to_string(row) + ", column '" +
                            t.header[c] + "' is not numeric");
        }
      }
      t.columns[t.header[c]].push_back(v);
    }
  }
  return t;
}

std::string render_metrics_svg(const CsvTable& table, const PlotOptions& options) {
  for (const char* col : {"iter", "loss_d", "loss_g", "hist_jsd", "grad_norm_g"}) {
    if (!table.columns.count(col)) throw ConfigError(std::string("CSV is missing column '") + col + "'");
  }
  const auto& iters = table.columns.at("iter");
  std::ostringstream svg;
  const int height = 3 * options.panel_height;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
      << height << "\" font-family=\"sans-serif\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  panel(svg, iters,
        {{"loss_d", "#1f77b4", &table.columns.at("loss_d")},
         {"loss_g", "#d62728", &table.columns.at("loss_g")}},
        "losses", false, 0, options);
  panel(svg, iters, {{"hist_jsd", "#2ca02c", &table.columns.at("hist_jsd")}}, "hist_jsd", false,
        options.panel_height, options);
  panel(svg, iters, {{"grad_norm_g", "#9467bd", &table.columns.at("grad_norm_g")}}, "grad_norm_g",
        options.log_grad_norm, 2 * options.panel_height, options);
  svg << "</svg>\n";
  return svg.str();
}

void plot_metrics(const std::filesystem::path& csv, const std::filesystem::path& out,
                  const PlotOptions& options) {
  const std::string svg = render_metrics_svg(read_csv_table(csv), options);
  std::ofstream f(out, std::ios::trunc);
  if (!f) throw IoError("cannot write plot " + out.string());
  f << svg;
  if (!f) throw IoError("write failed for plot " + out.string());
}

}  // namespace dfgan
