#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "dfgan/errors.h"
#include "dfgan/theory.h"

namespace dfgan {

TorusGrid::TorusGrid(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw ConfigError("TorusGrid: at least one axis is required");
  size_ = 1;
  for (std::size_t d : dims_) {
    if (d < 1) throw ConfigError("TorusGrid: axis length must be >= 1");
    size_ *= d;
  }
}

std::size_t TorusGrid::flat(std::span<const std::size_t> coords) const {
  if (coords.size() != dims_.size()) throw ConfigError("TorusGrid: coordinate rank mismatch");
  std::size_t idx = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) idx = idx * dims_[k] + coords[k] % dims_[k];
  return idx;
}

std::vector<std::size_t> TorusGrid::coords(std::size_t flat_index) const {
  std::vector<std::size_t> c(dims_.size());
  for (std::size_t k = dims_.size(); k-- > 0;) {
    c[k] = flat_index % dims_[k];
    flat_index /= dims_[k];
  }
  return c;
}

std::size_t TorusGrid::difference(std::size_t a, std::size_t b) const {
  std::size_t idx = 0;
  std::size_t stride = size_;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    stride /= dims_[k];
    const std::size_t ca = (a / stride) % dims_[k];
    const std::size_t cb = (b / stride) % dims_[k];
    idx = idx * dims_[k] + (ca + dims_[k] - cb) % dims_[k];
  }
  return idx;
}

std::size_t TorusGrid::sum(std::size_t a, std::size_t b) const {
  std::size_t idx = 0;
  std::size_t stride = size_;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    stride /= dims_[k];
    const std::size_t ca = (a / stride) % dims_[k];
    const std::size_t cb = (b / stride) % dims_[k];
    idx = idx * dims_[k] + (ca + cb) % dims_[k];
  }
  return idx;
}

DiscretePdf::DiscretePdf(TorusGrid grid, std::vector<double> mass, double tol)
    : grid_(std::move(grid)), mass_(std::move(mass)) {
  if (mass_.size() != grid_.size()) {
    throw ConfigError("DiscretePdf: " + std::to_string(mass_.size()) + " values for a grid of " +
                      std::to_string(grid_.size()) + " cells");
  }
  double total = 0.0;
  for (double v : mass_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("DiscretePdf: mass must be finite and nonnegative");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > tol) {
    throw ConfigError("DiscretePdf: mass sums to " + std::to_string(total));
  }
}

DiscretePdf DiscretePdf::delta(const TorusGrid& grid, std::size_t flat_index) {
  std::vector<double> m(grid.size(), 0.0);
  m.at(flat_index) = 1.0;
  return DiscretePdf(grid, std::move(m));
}

DiscretePdf DiscretePdf::uniform(const TorusGrid& grid) {
  return DiscretePdf(grid, std::vector<double>(grid.size(), 1.0 / static_cast<double>(grid.size())),
                     1e-12);
}

std::vector<double> circ_convolve(const TorusGrid& grid, std::span<const double> a,
                                  std::span<const double> b) {
  if (a.size() != grid.size() || b.size() != grid.size()) {
    throw ConfigError("circ_convolve: operand size does not match the grid");
  }
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t x = 0; x < grid.size(); ++x) {
    double acc = 0.0;
    for (std::size_t y = 0; y < grid.size(); ++y) acc += a[y] * b[grid.difference(x, y)];
    out[x] = acc;
  }
  return out;
}

DiscretePdf circ_convolve(const DiscretePdf& p, const DiscretePdf& q) {
  if (!(p.grid() == q.grid())) throw ConfigError("circ_convolve: grid mismatch");
  std::vector<double> out = circ_convolve(p.grid(), p.mass(), q.mass());
  for (double& v : out) v = std::max(v, 0.0);
  return DiscretePdf(p.grid(), std::move(out), 1e-10);
}

namespace {

// exp(-2 pi i <x, w/n>) with the phase reduced exactly in integers.
double phase(const TorusGrid& grid, const std::vector<std::size_t>& x,
             const std::vector<std::size_t>& w) {
  double turns = 0.0;
  for (std::size_t k = 0; k < grid.rank(); ++k) {
    const std::size_t n = grid.dims()[k];
    turns += static_cast<double>((x[k] * w[k]) % n) / static_cast<double>(n);
  }
  return 2.0 * std::numbers::pi * turns;
}

}  // namespace

Spectrum dft(const TorusGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw ConfigError("dft: size does not match the grid");
  Spectrum s;
  s.grid = grid;
  s.values.assign(grid.size(), Complex(0.0, 0.0));
  std::vector<std::vector<std::size_t>> coords(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) coords[i] = grid.coords(i);
  for (std::size_t w = 0; w < grid.size(); ++w) {
    Complex acc(0.0, 0.0);
    for (std::size_t x = 0; x < grid.size(); ++x) {
      if (values[x] == 0.0) continue;
      const double a = phase(grid, coords[x], coords[w]);
      acc += values[x] * Complex(std::cos(a), -std::sin(a));
    }
    s.values[w] = acc;
  }
  return s;
}

std::vector<double> inverse_dft_real(const Spectrum& s) {
  const TorusGrid& grid = s.grid;
  std::vector<std::vector<std::size_t>> coords(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) coords[i] = grid.coords(i);
  std::vector<double> out(grid.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (std::size_t x = 0; x < grid.size(); ++x) {
    Complex acc(0.0, 0.0);
    for (std::size_t w = 0; w < grid.size(); ++w) {
      const double a = phase(grid, coords[x], coords[w]);
      acc += s.values[w] * Complex(std::cos(a), std::sin(a));
    }
    out[x] = acc.real() * scale;
  }
  return out;
}

Spectrum spectrum(const DiscretePdf& p) { return dft(p.grid(), p.mass()); }

double jsd(const DiscretePdf& p, const DiscretePdf& q) {
  if (!(p.grid() == q.grid())) throw ConfigError("jsd: grid mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p[i];
    const double b = q[i];
    const double m = 0.5 * (a + b);
    if (a > 0.0) total += 0.5 * a * std::log(a / m);
    if (b > 0.0) total += 0.5 * b * std::log(b / m);
  }
  return std::clamp(total, 0.0, std::numbers::ln2);
}

}  // namespace dfgan
