#include "dfgan/synthdata.h"

#include <cmath>
#include <numbers>
#include <string>

#include "dfgan/errors.h"

namespace dfgan {

std::string_view to_string(MixtureKind k) {
  switch (k) {
    case MixtureKind::ring: return "ring";
    case MixtureKind::grid: return "grid";
    case MixtureKind::two_deltas_1d: return "two_deltas_1d";
  }
  return "unknown";
}

MixtureKind parse_mixture_kind(std::string_view name) {
  for (MixtureKind k : {MixtureKind::ring, MixtureKind::grid, MixtureKind::two_deltas_1d}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("dataset.kind: unknown value '" + std::string(name) + "'");
}

void MixtureSpec::validate() const {
  if (k < 1) throw ConfigError("dataset.k must be >= 1");
  if (!(mode_std >= 0.0) || !std::isfinite(mode_std)) {
    throw ConfigError("dataset.mode_std must be a finite value >= 0");
  }
  if (!std::isfinite(radius)) throw ConfigError("dataset.radius must be finite");
  if (n < 1) throw ConfigError("dataset.n must be >= 1");
  if (kind == MixtureKind::grid) {
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(k))));
    if (side * side != k) throw ConfigError("dataset.k must be a perfect square for grid");
  }
  if (kind == MixtureKind::two_deltas_1d && k != 2) {
    throw ConfigError("dataset.k must be 2 for two_deltas_1d");
  }
}

RealMatrix mixture_centers(const MixtureSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case MixtureKind::ring: {
      RealMatrix c(spec.k, 2);
      for (std::size_t j = 0; j < spec.k; ++j) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) /
                             static_cast<double>(spec.k);
        c(j, 0) = spec.radius * std::cos(angle);
        c(j, 1) = spec.radius * std::sin(angle);
      }
      return c;
    }
    case MixtureKind::grid: {
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(spec.k))));
      RealMatrix c(spec.k, 2);
      const double offset = 0.5 * static_cast<double>(side - 1);
      for (std::size_t a = 0; a < side; ++a) {
        for (std::size_t b = 0; b < side; ++b) {
          c(a * side + b, 0) = spec.radius * (static_cast<double>(a) - offset);
          c(a * side + b, 1) = spec.radius * (static_cast<double>(b) - offset);
        }
      }
      return c;
    }
    case MixtureKind::two_deltas_1d: {
      RealMatrix c(2, 1);
      c << -spec.radius, spec.radius;
      return c;
    }
  }
  return {};
}

Dataset generate(const MixtureSpec& spec) {
  Dataset ds;
  ds.centers = mixture_centers(spec);
  ds.mode_std = spec.mode_std;
  Rng rng(spec.seed);
  const auto modes = static_cast<std::size_t>(ds.centers.rows());
  ds.samples.resize(static_cast<Eigen::Index>(spec.n), ds.centers.cols());
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t j = rng.index(modes);
    for (Eigen::Index d = 0; d < ds.centers.cols(); ++d) {
      ds.samples(static_cast<Eigen::Index>(i), d) =
          ds.centers(static_cast<Eigen::Index>(j), d) + spec.mode_std * rng.normal();
    }
  }
  return ds;
}

RealMatrix sample_latent(std::size_t dim, std::size_t batch, Rng& rng) {
  if (dim < 1) throw ConfigError("sample_latent: dim must be >= 1");
  if (batch < 1) throw ConfigError("sample_latent: batch must be >= 1");
  return rng.normal_matrix(batch, dim);
}

}  // namespace dfgan
