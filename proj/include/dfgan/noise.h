#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "dfgan/mlp.h"
#include "dfgan/networks.h"
#include "dfgan/rng.h"

namespace dfgan {

enum class NoiseKind { none, fixed_gaussian, learned_sigma, generator_network, annealed_gaussian };

std::string_view to_string(NoiseKind k);
NoiseKind parse_noise_kind(std::string_view name);

struct NoiseModel {
  NoiseKind kind = NoiseKind::generator_network;
  double sigma0 = 0.5;    // fixed sigma, or initial sigma for learned/annealed
  double lambda = 1.0;    // weight of the magnitude penalty
  bool noisy_only = false;  // feed only filtered samples to the discriminator

  void validate() const;
  bool operator==(const NoiseModel&) const = default;
};

/// Where epsilon comes from: the model plus its trainable parameters.
/// learned_sigma stores one unconstrained scalar "sigma_raw" with
/// sigma = softplus(sigma_raw); generator_network stores the network weights.
struct NoiseSource {
  NoiseModel model;
  std::vector<LayerSpec> specs;  // generator_network only
  ParamStore params;
  std::size_t latent_dim = 0;
  std::size_t data_dim = 0;

  bool trainable() const {
    return model.kind == NoiseKind::learned_sigma || model.kind == NoiseKind::generator_network;
  }
};

struct NoiseSample {
  RealMatrix eps;
  RealMatrix draws;  // the standard-normal w that eps was computed from
  double sigma = 0.0;  // effective sigma for the Gaussian kinds
  std::optional<Tape> tape;  // generator_network, train mode
};

double softplus(double x);
double softplus_inverse(double y);

NoiseSource build_noise_source(const NetConfig& cfg, const NoiseModel& model, std::uint64_t seed);

/// Current standard deviation for the Gaussian kinds; nullopt for none and
/// generator_network. Annealing is linear from sigma0 at iteration 0 to zero
/// at total_iters.
std::optional<double> noise_sigma(const NoiseSource& src, std::size_t iter,
                                  std::optional<std::size_t> total_iters);

NoiseSample sample_noise(NoiseSource& src, std::size_t batch, Rng& rng, std::size_t iter,
                         std::optional<std::size_t> total_iters, ForwardOptions options = {});

/// Same as sample_noise but with caller-provided standard-normal draws
/// (batch x data_dim for the Gaussian kinds, batch x latent_dim for the network).
NoiseSample noise_from_draws(NoiseSource& src, RealMatrix draws, std::size_t iter,
                             std::optional<std::size_t> total_iters, ForwardOptions options = {});

/// Accumulates d(loss)/d(noise params) given d(loss)/d(eps).
void noise_backward(NoiseSource& src, const NoiseSample& sample, const RealMatrix& upstream);

/// Gamma: sigma^2 for learned_sigma, batch mean of |eps_i|^2 for the network,
/// zero for the kinds without trainable parameters.
double noise_penalty(const NoiseSource& src, const NoiseSample& sample);

/// Accumulates weight * d(Gamma)/d(noise params).
void noise_penalty_backward(NoiseSource& src, const NoiseSample& sample, double weight);

}  // namespace dfgan
