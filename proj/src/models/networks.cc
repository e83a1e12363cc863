#include "dfgan/networks.h"

#include <string>

#include "dfgan/errors.h"
#include "dfgan/rng.h"

namespace dfgan {

std::size_t NetConfig::noise_hidden_width() const {
  const std::size_t w = (hidden_width + noise_width_divisor - 1) / noise_width_divisor;
  return w < 1 ? 1 : w;
}

void NetConfig::validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw ConfigError(std::string("model.") + field + " must be >= 1");
  };
  require(latent_dim >= 1, "latent_dim");
  require(hidden_width >= 1, "hidden_width");
  require(data_dim >= 1, "data_dim");
  require(noise_width_divisor >= 1, "noise_width_divisor");
}

namespace {

Network assemble(std::vector<LayerSpec> specs, std::uint64_t seed) {
  Network net;
  net.specs = std::move(specs);
  Rng rng(seed);
  init_mlp_params(net.params, net.specs, rng);
  return net;
}

}  // namespace

Network build_generator(const NetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<LayerSpec> specs;
  std::size_t in = cfg.latent_dim;
  for (std::size_t l = 0; l < cfg.hidden_layers; ++l) {
    specs.push_back({in, cfg.hidden_width, Activation::relu, cfg.generator_batchnorm});
    in = cfg.hidden_width;
  }
  specs.push_back({in, cfg.data_dim, Activation::linear, false});
  return assemble(std::move(specs), seed);
}

Network build_discriminator(const NetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<LayerSpec> specs;
  std::size_t in = cfg.data_dim;
  for (std::size_t l = 0; l < cfg.hidden_layers; ++l) {
    specs.push_back(
        {in, cfg.hidden_width, Activation::leaky_relu, cfg.discriminator_batchnorm && l > 0});
    in = cfg.hidden_width;
  }
  specs.push_back({in, 1, Activation::sigmoid, false});
  return assemble(std::move(specs), seed);
}

Network build_noise_generator(const NetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t width = cfg.noise_hidden_width();
  std::vector<LayerSpec> specs;
  std::size_t in = cfg.latent_dim;
  for (std::size_t l = 0; l < cfg.hidden_layers; ++l) {
    specs.push_back({in, width, Activation::relu, cfg.generator_batchnorm});
    in = width;
  }
  specs.push_back({in, cfg.data_dim, Activation::scaled_tanh, false});
  return assemble(std::move(specs), seed);
}

}  // namespace dfgan
