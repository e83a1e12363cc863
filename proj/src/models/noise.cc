#include "dfgan/noise.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "dfgan/errors.h"

namespace dfgan {

namespace {

constexpr const char* kSigmaRaw = "sigma_raw";

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::none: return "none";
    case NoiseKind::fixed_gaussian: return "fixed_gaussian";
    case NoiseKind::learned_sigma: return "learned_sigma";
    case NoiseKind::generator_network: return "generator_network";
    case NoiseKind::annealed_gaussian: return "annealed_gaussian";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(std::string_view name) {
  for (NoiseKind k : {NoiseKind::none, NoiseKind::fixed_gaussian, NoiseKind::learned_sigma,
                      NoiseKind::generator_network, NoiseKind::annealed_gaussian}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("noise.kind: unknown value '" + std::string(name) + "'");
}

void NoiseModel::validate() const {
  if (!(sigma0 >= 0.0) || !std::isfinite(sigma0)) {
    throw ConfigError("noise.sigma0 must be a finite value >= 0");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("noise.lambda must be a finite value >= 0");
  }
  if (kind == NoiseKind::learned_sigma && !(sigma0 > 0.0)) {
    throw ConfigError("noise.sigma0 must be > 0 for learned_sigma");
  }
}

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw ConfigError("softplus_inverse: argument must be positive");
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

NoiseSource build_noise_source(const NetConfig& cfg, const NoiseModel& model, std::uint64_t seed) {
  cfg.validate();
  model.validate();
  NoiseSource src;
  src.model = model;
  src.latent_dim = cfg.latent_dim;
  src.data_dim = cfg.data_dim;
  if (model.kind == NoiseKind::generator_network) {
    Network net = build_noise_generator(cfg, seed);
    src.specs = std::move(net.specs);
    src.params = std::move(net.params);
  } else if (model.kind == NoiseKind::learned_sigma) {
    src.params.add(kSigmaRaw, RealMatrix::Constant(1, 1, softplus_inverse(model.sigma0)));
  }
  return src;
}

std::optional<double> noise_sigma(const NoiseSource& src, std::size_t iter,
                                  std::optional<std::size_t> total_iters) {
  switch (src.model.kind) {
    case NoiseKind::none:
    case NoiseKind::generator_network: return std::nullopt;
    case NoiseKind::fixed_gaussian: return src.model.sigma0;
    case NoiseKind::learned_sigma: return softplus(src.params.value(kSigmaRaw)(0, 0));
    case NoiseKind::annealed_gaussian: {
      if (!total_iters || *total_iters == 0) {
        throw ConfigError("annealed_gaussian noise needs a positive total iteration count");
      }
      const double frac = static_cast<double>(iter) / static_cast<double>(*total_iters);
      return src.model.sigma0 * std::max(0.0, 1.0 - frac);
    }
  }
  return std::nullopt;
}

NoiseSample sample_noise(NoiseSource& src, std::size_t batch, Rng& rng, std::size_t iter,
                         std::optional<std::size_t> total_iters, ForwardOptions options) {
  if (batch < 1) throw ConfigError("sample_noise: batch must be >= 1");
  if (src.model.kind == NoiseKind::none) {
    NoiseSample s;
    s.eps = RealMatrix::Zero(batch, src.data_dim);
    s.draws = s.eps;
    return s;
  }
  const std::size_t cols =
      src.model.kind == NoiseKind::generator_network ? src.latent_dim : src.data_dim;
  return noise_from_draws(src, rng.normal_matrix(batch, cols), iter, total_iters, options);
}

NoiseSample noise_from_draws(NoiseSource& src, RealMatrix draws, std::size_t iter,
                             std::optional<std::size_t> total_iters, ForwardOptions options) {
  NoiseSample s;
  switch (src.model.kind) {
    case NoiseKind::none:
      s.eps = RealMatrix::Zero(draws.rows(), src.data_dim);
      break;
    case NoiseKind::fixed_gaussian:
    case NoiseKind::learned_sigma:
    case NoiseKind::annealed_gaussian:
      if (static_cast<std::size_t>(draws.cols()) != src.data_dim) {
        throw ConfigError("noise draws must have data_dim columns");
      }
      s.sigma = *noise_sigma(src, iter, total_iters);
      s.eps = s.sigma * draws;
      break;
    case NoiseKind::generator_network: {
      ForwardResult fwd = mlp_forward(src.params, draws, src.specs, options);
      s.eps = std::move(fwd.output);
      if (options.mode == Mode::train) s.tape = std::move(fwd.tape);
      break;
    }
  }
  s.draws = std::move(draws);
  return s;
}

void noise_backward(NoiseSource& src, const NoiseSample& sample, const RealMatrix& upstream) {
  if (upstream.rows() != sample.eps.rows() || upstream.cols() != sample.eps.cols()) {
    throw ConfigError("noise_backward: upstream shape mismatch");
  }
  switch (src.model.kind) {
    case NoiseKind::learned_sigma: {
      const double raw = src.params.value(kSigmaRaw)(0, 0);
      // eps = softplus(raw) * w
      src.params.grad(kSigmaRaw)(0, 0) +=
          (upstream.array() * sample.draws.array()).sum() * logistic(raw);
      break;
    }
    case NoiseKind::generator_network:
      if (!sample.tape) throw ConfigError("noise_backward: sample has no tape");
      mlp_backward(*sample.tape, upstream);
      break;
    default:
      break;
  }
}

double noise_penalty(const NoiseSource& src, const NoiseSample& sample) {
  switch (src.model.kind) {
    case NoiseKind::learned_sigma: {
      const double sigma = softplus(src.params.value(kSigmaRaw)(0, 0));
      return sigma * sigma;
    }
    case NoiseKind::generator_network:
      if (sample.eps.rows() == 0) return 0.0;
      return sample.eps.squaredNorm() / static_cast<double>(sample.eps.rows());
    default:
      return 0.0;
  }
}

void noise_penalty_backward(NoiseSource& src, const NoiseSample& sample, double weight) {
  switch (src.model.kind) {
    case NoiseKind::learned_sigma: {
      const double raw = src.params.value(kSigmaRaw)(0, 0);
      src.params.grad(kSigmaRaw)(0, 0) += weight * 2.0 * softplus(raw) * logistic(raw);
      break;
    }
    case NoiseKind::generator_network: {
      const double scale = weight * 2.0 / static_cast<double>(sample.eps.rows());
      noise_backward(src, sample, scale * sample.eps);
      break;
    }
    default:
      break;
  }
}

}  // namespace dfgan
