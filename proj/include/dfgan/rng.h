#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "dfgan/matrix.h"

namespace dfgan {

// Deterministic generator: std::mt19937_64 (output fully specified by the
// standard) feeding a hand-rolled Box-Muller transform, so draws are identical
// across standard library implementations.
class Rng {
 public:
  static constexpr std::string_view kGeneratorId = "mt19937_64+box_muller/v1";

  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  RealMatrix normal_matrix(std::size_t rows, std::size_t cols, double stddev = 1.0);

  std::string serialize() const;
  void deserialize(const std::string& state);

  bool operator==(const Rng& other) const;

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dfgan
