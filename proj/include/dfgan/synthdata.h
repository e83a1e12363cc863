#pragma once

#include <cstdint>
#include <string_view>

#include "dfgan/matrix.h"
#include "dfgan/rng.h"

namespace dfgan {

enum class MixtureKind { ring, grid, two_deltas_1d };

std::string_view to_string(MixtureKind k);
MixtureKind parse_mixture_kind(std::string_view name);

struct MixtureSpec {
  MixtureKind kind = MixtureKind::ring;
  std::size_t k = 8;       // number of modes (a perfect square for grid, 2 for two_deltas_1d)
  double radius = 2.0;     // ring radius, grid spacing, or delta offset
  double mode_std = 0.02;
  std::size_t n = 10000;
  std::uint64_t seed = 0;

  std::size_t data_dim() const { return kind == MixtureKind::two_deltas_1d ? 1 : 2; }
  void validate() const;
  bool operator==(const MixtureSpec&) const = default;
};

struct Dataset {
  RealMatrix samples;
  RealMatrix centers;
  double mode_std = 0.0;
};

/// Mode centers: ring at angles 2 pi j / k; grid sqrt(k) x sqrt(k) centered on
/// the origin; two_deltas_1d at -radius and +radius.
RealMatrix mixture_centers(const MixtureSpec& spec);

/// n samples: uniform mode choice plus N(0, mode_std^2 I) offsets. Pure in spec.
Dataset generate(const MixtureSpec& spec);

/// Standard-normal batch x dim matrix.
RealMatrix sample_latent(std::size_t dim, std::size_t batch, Rng& rng);

}  // namespace dfgan
