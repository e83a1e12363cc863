#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dfgan/batchnorm.h"
#include "dfgan/matrix.h"
#include "dfgan/param_store.h"
#include "dfgan/rng.h"

namespace dfgan {

enum class Activation { relu, leaky_relu, tanh, scaled_tanh, sigmoid, linear };

inline constexpr double kLeakyReluSlope = 0.2;
inline constexpr double kScaledTanhGain = 2.0;

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct LayerSpec {
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  Activation activation = Activation::linear;
  bool batchnorm = false;

  bool operator==(const LayerSpec&) const = default;
};

/// Throws ConfigError unless dims chain, are >= 1, and scaled_tanh only
/// appears on the final layer.
void validate_layer_specs(std::span<const LayerSpec> specs);

/// Parameter names used by a layer: "<layer>.W", "<layer>.b", "<layer>.gamma",
/// "<layer>.beta", "<layer>.running_mean", "<layer>.running_var".
std::string layer_param_name(std::size_t layer, std::string_view field);

/// Allocates and initializes the parameters of `specs` in `params`.
/// Weights ~ N(0, 2/in) for (leaky) ReLU layers and N(0, 1/in) otherwise;
/// biases zero; batchnorm layers get gamma = 1, beta = 0 and no bias.
void init_mlp_params(ParamStore& params, std::span<const LayerSpec> specs, Rng& rng);

enum class Mode { train, eval };

struct ForwardOptions {
  Mode mode = Mode::train;
  // Train-mode forwards normally fold batch statistics into the running
  // averages; diagnostics that must not mutate state turn this off.
  bool update_running_stats = true;
};

struct LayerCache {
  RealMatrix input;
  RealMatrix output;
  std::optional<BatchNormCache> bn;
};

/// Everything the reverse pass needs. Holds a non-owning pointer to the store
/// it was recorded against and that store's version at record time.
struct Tape {
  ParamStore* params = nullptr;
  std::uint64_t version = 0;
  Mode mode = Mode::train;
  std::vector<LayerSpec> specs;
  std::vector<LayerCache> layers;
};

struct ForwardResult {
  RealMatrix output;
  Tape tape;
};

ForwardResult mlp_forward(ParamStore& params, const RealMatrix& input,
                          std::span<const LayerSpec> specs, ForwardOptions options = {});

/// Reverse pass: accumulates parameter gradients into the tape's store and
/// returns d(loss)/d(input). Throws StaleTapeError if the store changed since
/// the forward pass.
RealMatrix mlp_backward(const Tape& tape, const RealMatrix& upstream);

/// Elementwise activation and its derivative expressed through the output.
RealMatrix apply_activation(Activation a, const RealMatrix& pre);
RealMatrix activation_derivative(Activation a, const RealMatrix& out);

}  // namespace dfgan
