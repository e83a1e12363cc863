#include "dfgan/mlp.h"

#include <cmath>

#include "dfgan/errors.h"

namespace dfgan {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
    case Activation::scaled_tanh: return "scaled_tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  for (Activation a : {Activation::relu, Activation::leaky_relu, Activation::tanh,
                       Activation::scaled_tanh, Activation::sigmoid, Activation::linear}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

void validate_layer_specs(std::span<const LayerSpec> specs) {
  if (specs.empty()) throw ConfigError("mlp: at least one layer is required");
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto& s = specs[l];
    if (s.in_dim < 1 || s.out_dim < 1) {
      throw ConfigError("mlp: layer " + std::to_string(l) + " has a zero dimension");
    }
    if (l > 0 && specs[l - 1].out_dim != s.in_dim) {
      throw ConfigError("mlp: layer " + std::to_string(l) + " expects " +
                        std::to_string(s.in_dim) + " inputs but layer " + std::to_string(l - 1) +
                        " produces " + std::to_string(specs[l - 1].out_dim));
    }
    if (s.activation == Activation::scaled_tanh && l + 1 != specs.size()) {
      throw ConfigError("mlp: scaled_tanh is only valid on the final layer (layer " +
                        std::to_string(l) + ")");
    }
  }
}

std::string layer_param_name(std::size_t layer, std::string_view field) {
  return std::to_string(layer) + "." + std::string(field);
}

void init_mlp_params(ParamStore& params, std::span<const LayerSpec> specs, Rng& rng) {
  validate_layer_specs(specs);
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto& s = specs[l];
    const bool rectifier =
        s.activation == Activation::relu || s.activation == Activation::leaky_relu;
    const double stddev = std::sqrt((rectifier ? 2.0 : 1.0) / static_cast<double>(s.in_dim));
    params.add(layer_param_name(l, "W"), rng.normal_matrix(s.in_dim, s.out_dim, stddev));
    if (s.batchnorm) {
      // The batchnorm shift makes a bias redundant.
      params.add(layer_param_name(l, "gamma"), RealMatrix::Ones(1, s.out_dim));
      params.add(layer_param_name(l, "beta"), RealMatrix::Zero(1, s.out_dim));
      params.add(layer_param_name(l, "running_mean"), RealMatrix::Zero(1, s.out_dim), false);
      params.add(layer_param_name(l, "running_var"), RealMatrix::Ones(1, s.out_dim), false);
    } else {
      params.add(layer_param_name(l, "b"), RealMatrix::Zero(1, s.out_dim));
    }
  }
}

RealMatrix apply_activation(Activation a, const RealMatrix& pre) {
  switch (a) {
    case Activation::relu: return pre.cwiseMax(0.0);
    case Activation::leaky_relu:
      return pre.unaryExpr([](double v) { return v > 0.0 ? v : kLeakyReluSlope * v; });
    case Activation::tanh: return pre.array().tanh().matrix();
    case Activation::scaled_tanh: return (kScaledTanhGain * pre.array().tanh()).matrix();
    case Activation::sigmoid:
      return pre.unaryExpr([](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
    case Activation::linear: return pre;
  }
  return pre;
}

RealMatrix activation_derivative(Activation a, const RealMatrix& out) {
  switch (a) {
    case Activation::relu:
      return out.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::leaky_relu:
      return out.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakyReluSlope; });
    case Activation::tanh: return (1.0 - out.array().square()).matrix();
    case Activation::scaled_tanh: {
      const auto t = out.array() / kScaledTanhGain;
      return (kScaledTanhGain * (1.0 - t.square())).matrix();
    }
    case Activation::sigmoid: return (out.array() * (1.0 - out.array())).matrix();
    case Activation::linear: return RealMatrix::Ones(out.rows(), out.cols());
  }
  return RealMatrix::Ones(out.rows(), out.cols());
}

ForwardResult mlp_forward(ParamStore& params, const RealMatrix& input,
                          std::span<const LayerSpec> specs, ForwardOptions options) {
  validate_layer_specs(specs);
  if (static_cast<std::size_t>(input.cols()) != specs.front().in_dim) {
    throw ConfigError("mlp_forward: input has " + std::to_string(input.cols()) +
                      " columns, first layer expects " + std::to_string(specs.front().in_dim));
  }

  ForwardResult result;
  Tape& tape = result.tape;
  tape.params = &params;
  tape.mode = options.mode;
  tape.specs.assign(specs.begin(), specs.end());
  tape.layers.reserve(specs.size());

  RealMatrix current = input;
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto& s = specs[l];
    const RealMatrix& w = params.value(layer_param_name(l, "W"));
    if (static_cast<std::size_t>(w.rows()) != s.in_dim ||
        static_cast<std::size_t>(w.cols()) != s.out_dim) {
      throw ConfigError("mlp_forward: layer " + std::to_string(l) + " weight shape mismatch");
    }
    LayerCache cache;
    RealMatrix pre = current * w;
    if (s.batchnorm) {
      const RowVector gamma = params.value(layer_param_name(l, "gamma"));
      const RowVector beta = params.value(layer_param_name(l, "beta"));
      if (options.mode == Mode::train) {
        BatchNormForward bn = batchnorm_forward(pre, gamma, beta);
        if (options.update_running_stats) {
          const double n = static_cast<double>(pre.rows());
          RealMatrix& rm = params.buffer(layer_param_name(l, "running_mean"));
          RealMatrix& rv = params.buffer(layer_param_name(l, "running_var"));
          // Running variance tracks the unbiased estimate.
          rm = kBatchNormMomentum * rm + (1.0 - kBatchNormMomentum) * bn.batch_mean;
          rv = kBatchNormMomentum * rv + (1.0 - kBatchNormMomentum) * (n / (n - 1.0)) * bn.batch_var;
        }
        pre = std::move(bn.output);
        cache.bn = std::move(bn.cache);
      } else {
        pre = batchnorm_inference(pre, gamma, beta,
                                  params.value(layer_param_name(l, "running_mean")),
                                  params.value(layer_param_name(l, "running_var")));
      }
    } else {
      pre.rowwise() += params.value(layer_param_name(l, "b")).row(0);
    }
    RealMatrix out = apply_activation(s.activation, pre);
    if (!out.allFinite()) {
      throw NumericError("mlp_forward: non-finite activation in layer " + std::to_string(l) +
                         " (" + std::string(to_string(s.activation)) + ")");
    }
    cache.input = std::move(current);
    current = out;
    cache.output = std::move(out);
    tape.layers.push_back(std::move(cache));
  }
  tape.version = params.version();
  result.output = std::move(current);
  return result;
}

RealMatrix mlp_backward(const Tape& tape, const RealMatrix& upstream) {
  if (tape.params == nullptr || tape.layers.empty()) {
    throw ConfigError("mlp_backward: empty tape");
  }
  if (tape.mode != Mode::train) {
    throw ConfigError("mlp_backward: tape was recorded in eval mode");
  }
  ParamStore& params = *tape.params;
  if (params.version() != tape.version) {
    throw StaleTapeError("mlp_backward: parameters were modified after the forward pass");
  }
  const RealMatrix& final_out = tape.layers.back().output;
  if (upstream.rows() != final_out.rows() || upstream.cols() != final_out.cols()) {
    throw ConfigError("mlp_backward: upstream gradient shape mismatch");
  }

  RealMatrix grad = upstream;
  for (std::size_t l = tape.layers.size(); l-- > 0;) {
    const auto& s = tape.specs[l];
    const auto& cache = tape.layers[l];
    grad.array() *= activation_derivative(s.activation, cache.output).array();
    if (s.batchnorm) {
      BatchNormGrads bn = batchnorm_backward(*cache.bn, grad);
      params.grad(layer_param_name(l, "gamma")).row(0) += bn.gamma;
      params.grad(layer_param_name(l, "beta")).row(0) += bn.beta;
      grad = std::move(bn.input);
    } else {
      params.grad(layer_param_name(l, "b")).row(0) += grad.colwise().sum();
    }
    const RealMatrix& w = params.value(layer_param_name(l, "W"));
    params.grad(layer_param_name(l, "W")).noalias() += cache.input.transpose() * grad;
    grad = grad * w.transpose();
  }
  return grad;
}

}  // namespace dfgan
