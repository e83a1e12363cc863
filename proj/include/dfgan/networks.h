#pragma once

#include <cstdint>
#include <vector>

#include "dfgan/mlp.h"
#include "dfgan/param_store.h"

namespace dfgan {

struct NetConfig {
  std::size_t latent_dim = 2;  // dimension of z and of the noise-generator input w
  std::size_t hidden_width = 512;
  std::size_t hidden_layers = 3;
  std::size_t data_dim = 2;
  std::size_t noise_width_divisor = 8;
  bool generator_batchnorm = true;
  bool discriminator_batchnorm = true;

  /// ceil(hidden_width / noise_width_divisor), at least 1.
  std::size_t noise_hidden_width() const;
  void validate() const;

  bool operator==(const NetConfig&) const = default;
};

/// A sequential MLP together with the store holding its parameters.
struct Network {
  std::vector<LayerSpec> specs;
  ParamStore params;

  ForwardResult forward(const RealMatrix& input, ForwardOptions options = {}) {
    return mlp_forward(params, input, specs, options);
  }
  std::size_t in_dim() const { return specs.front().in_dim; }
  std::size_t out_dim() const { return specs.back().out_dim; }
};

/// latent -> hidden x hidden_layers (ReLU + batchnorm) -> data_dim, linear.
Network build_generator(const NetConfig& cfg, std::uint64_t seed);

/// data -> hidden x hidden_layers (leaky ReLU; batchnorm on every hidden layer
/// but the first) -> 1, sigmoid.
Network build_discriminator(const NetConfig& cfg, std::uint64_t seed);

/// Generator-shaped MLP with reduced width and a 2*tanh output.
Network build_noise_generator(const NetConfig& cfg, std::uint64_t seed);

}  // namespace dfgan
