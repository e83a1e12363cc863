#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dfgan/rng.h"

namespace dfgan {

/// Shape of a d-dimensional torus Z_{n1} x ... x Z_{nd}, flattened row-major
/// (last axis fastest).
class TorusGrid {
 public:
  TorusGrid() = default;
  explicit TorusGrid(std::vector<std::size_t> dims);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t size() const { return size_; }
  std::size_t rank() const { return dims_.size(); }

  std::size_t flat(std::span<const std::size_t> coords) const;
  std::vector<std::size_t> coords(std::size_t flat_index) const;
  /// Flat index of (a - b) mod dims, componentwise.
  std::size_t difference(std::size_t a, std::size_t b) const;
  /// Flat index of (a + b) mod dims, componentwise.
  std::size_t sum(std::size_t a, std::size_t b) const;

  bool operator==(const TorusGrid&) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::size_t size_ = 0;
};

/// Probability mass function on a torus grid: entries >= 0 summing to 1.
class DiscretePdf {
 public:
  /// Validates nonnegativity and |sum - 1| <= tol.
  DiscretePdf(TorusGrid grid, std::vector<double> mass, double tol = 1e-12);

  static DiscretePdf delta(const TorusGrid& grid, std::size_t flat_index);
  static DiscretePdf uniform(const TorusGrid& grid);

  const TorusGrid& grid() const { return grid_; }
  const std::vector<double>& mass() const { return mass_; }
  std::size_t size() const { return mass_.size(); }
  double operator[](std::size_t i) const { return mass_[i]; }

 private:
  TorusGrid grid_;
  std::vector<double> mass_;
};

using Complex = std::complex<double>;

struct Spectrum {
  TorusGrid grid;
  std::vector<Complex> values;  // p_hat(w) = sum_x p(x) exp(-2 pi i <x, w / n>)
};

/// Circular convolution of two (possibly signed) arrays on the same grid.
std::vector<double> circ_convolve(const TorusGrid& grid, std::span<const double> a,
                                  std::span<const double> b);
DiscretePdf circ_convolve(const DiscretePdf& p, const DiscretePdf& q);

Spectrum dft(const TorusGrid& grid, std::span<const double> values);
std::vector<double> inverse_dft_real(const Spectrum& s);
Spectrum spectrum(const DiscretePdf& p);

/// Jensen-Shannon divergence in nats, 0 ln 0 := 0.
double jsd(const DiscretePdf& p, const DiscretePdf& q);

/// 1/2 (q + q * p_eps).
DiscretePdf filtered_mixture(const DiscretePdf& q, const DiscretePdf& p_eps);

/// Optimal discriminator for the identity-plus-filter objective:
///   (p_d + p_d*p_eps) / (p_d + p_d*p_eps + p_g + p_g*p_eps), 0.5 where 0/0.
std::vector<double> optimal_discriminator(const DiscretePdf& p_d, const DiscretePdf& p_g,
                                          const DiscretePdf& p_eps);

/// JSD(1/2 (p_d + p_d*p_eps), 1/2 (p_g + p_g*p_eps)).
double mixture_objective(const DiscretePdf& p_d, const DiscretePdf& p_g, const DiscretePdf& p_eps);

inline constexpr double kSingularityTolerance = 1e-9;

/// min over frequencies of |1 + p_eps_hat(w)|.
double min_filter_gap(const DiscretePdf& p_eps);

struct MixtureSolution {
  DiscretePdf q;
  double min_gap = 0.0;           // min |1 + p_eps_hat|
  double condition_spectral = 0.0;  // max |1 + p_eps_hat| / min |1 + p_eps_hat|
  double lu_rcond = 0.0;          // reciprocal condition estimate of the dense LU
  double spectral_residual = 0.0;  // L-inf distance to the spectral-division solution
};

/// Recovers q from t = 1/2 (q + q*p_eps) by a dense LU solve of
/// (I + C_eps) q = 2t, cross-checked against division in the Fourier domain.
/// Throws NonUniqueError when min |1 + p_eps_hat| <= kSingularityTolerance.
MixtureSolution solve_mixture(const DiscretePdf& target, const DiscretePdf& p_eps);

struct TheoremReport {
  std::size_t trials = 0;
  std::size_t passed = 0;
  double worst_residual = 0.0;
  double worst_condition = 0.0;
  std::size_t degenerate_total = 0;
  std::size_t degenerate_flagged = 0;
  std::vector<std::string> failures;

  bool ok() const {
    return passed == trials && degenerate_flagged == degenerate_total && failures.empty();
  }
};

struct TheoremOptions {
  std::size_t trials = 200;
  std::size_t max_grid = 64;  // bound on the number of cells of each random grid
  bool include_degenerate = false;
  double residual_tolerance = 1e-8;
};

/// Random recoveries of p_d from its filtered mixture with strictly positive
/// p_eps, plus (optionally) constructed degenerate filters that must be
/// rejected. Failures are recorded in the report, never thrown.
TheoremReport verify_theorem(const TheoremOptions& options, Rng& rng);

/// Filters whose spectrum reaches -1: all mass on cells with an odd
/// coordinate along some even-length axis. Includes Z_2 delta_1.
std::vector<DiscretePdf> degenerate_filters(Rng& rng, std::size_t max_grid, std::size_t count);

}  // namespace dfgan
