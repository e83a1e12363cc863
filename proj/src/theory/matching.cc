#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dfgan/errors.h"
#include "dfgan/theory.h"

namespace dfgan {

namespace {

void require_same_grid(const DiscretePdf& a, const DiscretePdf& b, const char* where) {
  if (!(a.grid() == b.grid())) throw ConfigError(std::string(where) + ": grid mismatch");
}

std::vector<double> filtered_sum(const DiscretePdf& p, const DiscretePdf& p_eps) {
  std::vector<double> conv = circ_convolve(p.grid(), p.mass(), p_eps.mass());
  for (std::size_t i = 0; i < conv.size(); ++i) conv[i] += p[i];
  return conv;
}

// Random pdf with roughly half of the cells empty (at least one nonzero).
DiscretePdf random_sparse_pdf(const TorusGrid& grid, Rng& rng) {
  std::vector<double> m(grid.size(), 0.0);
  double total = 0.0;
  for (double& v : m) {
    if (rng.uniform() < 0.5) {
      const double u = rng.uniform();
      v = u * u * u + 1e-3;
      total += v;
    }
  }
  if (total == 0.0) {
    m[rng.index(m.size())] = 1.0;
    total = 1.0;
  }
  for (double& v : m) v /= total;
  return DiscretePdf(grid, std::move(m), 1e-10);
}

DiscretePdf random_positive_pdf(const TorusGrid& grid, Rng& rng) {
  std::vector<double> m(grid.size());
  double total = 0.0;
  for (double& v : m) {
    v = rng.uniform() + 1e-3;
    total += v;
  }
  for (double& v : m) v /= total;
  return DiscretePdf(grid, std::move(m), 1e-10);
}

TorusGrid random_grid(Rng& rng, std::size_t max_grid) {
  // Alternate between 1-D and 2-D tori; the cell count never exceeds max_grid.
  if (max_grid >= 4 && rng.uniform() < 0.5) {
    const std::size_t a = 2 + rng.index(max_grid / 2 - 1);
    const std::size_t b = 2 + rng.index(max_grid / a - 1);
    return TorusGrid({a, b});
  }
  return TorusGrid({2 + rng.index(max_grid - 1)});
}

}  // namespace

DiscretePdf filtered_mixture(const DiscretePdf& q, const DiscretePdf& p_eps) {
  require_same_grid(q, p_eps, "filtered_mixture");
  std::vector<double> t = filtered_sum(q, p_eps);
  for (double& v : t) v *= 0.5;
  return DiscretePdf(q.grid(), std::move(t), 1e-10);
}

std::vector<double> optimal_discriminator(const DiscretePdf& p_d, const DiscretePdf& p_g,
                                          const DiscretePdf& p_eps) {
  require_same_grid(p_d, p_g, "optimal_discriminator");
  require_same_grid(p_d, p_eps, "optimal_discriminator");
  const std::vector<double> real = filtered_sum(p_d, p_eps);
  const std::vector<double> fake = filtered_sum(p_g, p_eps);
  std::vector<double> d(real.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double denom = real[i] + fake[i];
    d[i] = denom > 0.0 ? real[i] / denom : 0.5;
  }
  return d;
}

double mixture_objective(const DiscretePdf& p_d, const DiscretePdf& p_g,
                         const DiscretePdf& p_eps) {
  return jsd(filtered_mixture(p_d, p_eps), filtered_mixture(p_g, p_eps));
}

double min_filter_gap(const DiscretePdf& p_eps) {
  const Spectrum s = spectrum(p_eps);
  double gap = std::numeric_limits<double>::infinity();
  for (const Complex& v : s.values) gap = std::min(gap, std::abs(1.0 + v));
  return gap;
}

MixtureSolution solve_mixture(const DiscretePdf& target, const DiscretePdf& p_eps) {
  require_same_grid(target, p_eps, "solve_mixture");
  const TorusGrid& grid = target.grid();
  const std::size_t n = grid.size();

  const Spectrum eps_hat = spectrum(p_eps);
  double min_gap = std::numeric_limits<double>::infinity();
  double max_gap = 0.0;
  for (const Complex& v : eps_hat.values) {
    const double g = std::abs(1.0 + v);
    min_gap = std::min(min_gap, g);
    max_gap = std::max(max_gap, g);
  }
  if (min_gap <= kSingularityTolerance) {
    std::ostringstream os;
    os << "solve_mixture: filter is degenerate, min |1 + p_eps_hat| = " << min_gap
       << "; the filtered mixture does not determine q uniquely";
    throw NonUniqueError(os.str(), min_gap);
  }

  Eigen::MatrixXd a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a(i, j) = p_eps[grid.difference(i, j)] + (i == j ? 1.0 : 0.0);
    }
  }
  Eigen::VectorXd rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs(i) = 2.0 * target[i];
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::VectorXd q = lu.solve(rhs);

  // Fourier-domain route: q_hat = 2 t_hat / (1 + p_eps_hat).
  Spectrum t_hat = spectrum(target);
  for (std::size_t w = 0; w < n; ++w) {
    t_hat.values[w] = 2.0 * t_hat.values[w] / (1.0 + eps_hat.values[w]);
  }
  const std::vector<double> q_spectral = inverse_dft_real(t_hat);

  std::vector<double> mass(n);
  double spectral_residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    spectral_residual = std::max(spectral_residual, std::abs(q(i) - q_spectral[i]));
    if (q(i) < -1e-9) {
      throw ConfigError("solve_mixture: target is not the filtered mixture of a pdf (q[" +
                        std::to_string(i) + "] = " + std::to_string(q(i)) + ")");
    }
    mass[i] = std::max(q(i), 0.0);
  }

  MixtureSolution sol{DiscretePdf(grid, std::move(mass), 1e-9), min_gap, max_gap / min_gap,
                      lu.rcond(), spectral_residual};
  return sol;
}

std::vector<DiscretePdf> degenerate_filters(Rng& rng, std::size_t max_grid, std::size_t count) {
  std::vector<DiscretePdf> out;
  // Z_2 with all mass on 1: p_hat(1) = -1.
  out.push_back(DiscretePdf::delta(TorusGrid({2}), 1));
  if (max_grid >= 4) {
    const TorusGrid z2z2({2, 2});
    out.push_back(DiscretePdf::delta(z2z2, z2z2.flat(std::vector<std::size_t>{1, 0})));
    out.push_back(DiscretePdf::delta(z2z2, z2z2.flat(std::vector<std::size_t>{0, 1})));
    out.push_back(DiscretePdf::delta(z2z2, z2z2.flat(std::vector<std::size_t>{1, 1})));
  }
  while (out.size() < count) {
    // Random grid with one even axis; mass only on odd coordinates of that axis
    // so that <x, w*> = pi for w* at half the axis length.
    TorusGrid grid = random_grid(rng, max_grid);
    std::vector<std::size_t> dims = grid.dims();
    const std::size_t axis = rng.index(dims.size());
    if (dims[axis] % 2 == 1) {
      --dims[axis];  // every axis has length >= 2, so odd lengths are >= 3
      grid = TorusGrid(dims);
    }
    std::vector<double> m(grid.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.coords(i)[axis] % 2 == 1 && rng.uniform() < 0.7) {
        m[i] = rng.uniform() + 1e-3;
        total += m[i];
      }
    }
    if (total == 0.0) {
      std::vector<std::size_t> c(dims.size(), 0);
      c[axis] = 1;
      m[grid.flat(c)] = 1.0;
      total = 1.0;
    }
    for (double& v : m) v /= total;
    out.emplace_back(grid, std::move(m), 1e-10);
  }
  if (out.size() > std::max<std::size_t>(count, 1)) {
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(count, 1)), out.end());
  }
  return out;
}

TheoremReport verify_theorem(const TheoremOptions& options, Rng& rng) {
  if (options.trials < 1) throw ConfigError("verify_theorem: trials must be >= 1");
  if (options.max_grid < 2) throw ConfigError("verify_theorem: max_grid must be >= 2");

  TheoremReport report;
  report.trials = options.trials;
  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    const TorusGrid grid = random_grid(rng, options.max_grid);
    const DiscretePdf p_d = random_sparse_pdf(grid, rng);
    const DiscretePdf p_eps = random_positive_pdf(grid, rng);
    std::ostringstream where;
    where << "trial " << trial << " grid [";
    for (std::size_t k = 0; k < grid.rank(); ++k) where << (k ? "x" : "") << grid.dims()[k];
    where << "]";
    try {
      const DiscretePdf t = filtered_mixture(p_d, p_eps);
      const MixtureSolution sol = solve_mixture(t, p_eps);
      double residual = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        residual = std::max(residual, std::abs(sol.q[i] - p_d[i]));
      }
      report.worst_residual = std::max(report.worst_residual, residual);
      report.worst_condition = std::max(report.worst_condition, sol.condition_spectral);

      // A different candidate must leave a strictly positive objective.
      const DiscretePdf other = random_positive_pdf(grid, rng);
      std::vector<double> perturbed(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) perturbed[i] = 0.9 * p_d[i] + 0.1 * other[i];
      const double gap = mixture_objective(p_d, DiscretePdf(grid, perturbed, 1e-10), p_eps);

      if (residual > options.residual_tolerance) {
        report.failures.push_back(where.str() + ": residual " + std::to_string(residual));
      } else if (!(gap > 0.0)) {
        report.failures.push_back(where.str() + ": perturbed candidate has zero objective");
      } else {
        ++report.passed;
      }
    } catch (const std::exception& e) {
      report.failures.push_back(where.str() + ": " + e.what());
    }
  }

  if (options.include_degenerate) {
    const auto filters = degenerate_filters(rng, options.max_grid, options.trials);
    for (const DiscretePdf& p_eps : filters) {
      ++report.degenerate_total;
      try {
        solve_mixture(filtered_mixture(DiscretePdf::uniform(p_eps.grid()), p_eps), p_eps);
      } catch (const NonUniqueError&) {
        ++report.degenerate_flagged;
      } catch (const std::exception& e) {
        report.failures.push_back(std::string("degenerate case: ") + e.what());
      }
    }
  }
  return report;
}

}  // namespace dfgan
