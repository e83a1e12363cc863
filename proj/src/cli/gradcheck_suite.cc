#include "dfgan/gradcheck_suite.h"

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <optional>

#include "dfgan/errors.h"
#include "dfgan/losses.h"
#include "dfgan/mlp.h"
#include "dfgan/noise.h"
#include "dfgan/train.h"

namespace dfgan {

namespace {

constexpr ForwardOptions kFrozen{Mode::train, false};

// Central differences carry roundoff of about 1e-16 * |f| / h, so an element
// whose exact gradient is below this floor cannot be resolved to 1e-4
// relative accuracy. End-to-end probe points are the first seed at which no
// analytic element is that small.
constexpr double kMinProbeGradient = 1e-6;
constexpr std::uint64_t kFirstProbeSeed = 401;
constexpr std::uint64_t kProbeSeedAttempts = 32;

std::optional<GradCheckResult> conditioned_check(const ScalarObjective& fn, ParamStore& params,
                                                 double h) {
  params.zero_grad();
  fn(params, true);
  double smallest = std::numeric_limits<double>::infinity();
  for (const ParamEntry& e : params.entries()) {
    if (e.trainable && e.grad.size() > 0) smallest = std::min(smallest, e.grad.cwiseAbs().minCoeff());
  }
  params.zero_grad();
  if (smallest < kMinProbeGradient) return std::nullopt;
  return gradient_check(fn, params, h);
}

template <typename Check>
GradCheckResult first_conditioned(Check check) {
  for (std::uint64_t seed = kFirstProbeSeed; seed < kFirstProbeSeed + kProbeSeedAttempts; ++seed) {
    if (auto r = check(seed)) return *r;
  }
  throw NumericError("gradcheck: no well-conditioned probe point found");
}

RealMatrix uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  RealMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = lo + (hi - lo) * rng.uniform();
  return m;
}

GradCheckResult check_mlp(std::vector<LayerSpec> specs, std::size_t batch, std::uint64_t seed,
                          double h) {
  Rng rng(seed);
  ParamStore params;
  init_mlp_params(params, specs, rng);
  params.add("input", rng.normal_matrix(batch, specs.front().in_dim));
  const RealMatrix weights = rng.normal_matrix(batch, specs.back().out_dim);
  // Nonzero biases so that every term of the affine map is exercised.
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const std::string b = layer_param_name(l, "b");
    if (params.contains(b)) params.mutable_value(b) = 0.1 * rng.normal_matrix(1, specs[l].out_dim);
  }
  const ScalarObjective fn = [&specs, &weights](ParamStore& p, bool accumulate) {
    ForwardResult f = mlp_forward(p, p.value("input"), specs, kFrozen);
    const double v = (f.output.array() * weights.array()).sum();
    if (accumulate) p.grad("input") += mlp_backward(f.tape, weights);
    return v;
  };
  return gradient_check(fn, params, h);
}

GradCheckResult check_layer(Activation a, double h) {
  return check_mlp({{3, 4, a, false}}, 5, 101 + static_cast<std::uint64_t>(a), h);
}

GradCheckResult check_batchnorm(double h) {
  return check_mlp({{3, 5, Activation::leaky_relu, true}, {5, 2, Activation::tanh, true}}, 6, 211,
                   h);
}

GradCheckResult check_loss(const std::function<LossTerms(const RealMatrix&, const RealMatrix&)>& loss,
                           std::uint64_t seed, double h) {
  Rng rng(seed);
  ParamStore params;
  params.add("d_clean", uniform_matrix(rng, 4, 1, 0.05, 0.95));
  params.add("d_noisy", uniform_matrix(rng, 4, 1, 0.05, 0.95));
  const ScalarObjective fn = [&loss](ParamStore& p, bool accumulate) {
    const LossTerms t = loss(p.value("d_clean"), p.value("d_noisy"));
    if (accumulate) {
      p.grad("d_clean") += t.grad_clean;
      p.grad("d_noisy") += t.grad_noisy;
    }
    return t.value;
  };
  return gradient_check(fn, params, h);
}

NetConfig small_net() {
  NetConfig net;
  net.latent_dim = 2;
  net.hidden_width = 8;
  net.hidden_layers = 2;
  net.data_dim = 2;
  net.noise_width_divisor = 2;
  return net;
}

GradCheckResult check_penalty(NoiseKind kind, double h) {
  NoiseModel model;
  model.kind = kind;
  model.sigma0 = 0.7;
  model.lambda = 0.3;
  NoiseSource src = build_noise_source(small_net(), model, 307);
  Rng rng(311);
  const std::size_t cols = kind == NoiseKind::generator_network ? src.latent_dim : src.data_dim;
  const RealMatrix draws = rng.normal_matrix(6, cols);
  const RealMatrix weights = rng.normal_matrix(6, src.data_dim);
  const ScalarObjective fn = [&](ParamStore&, bool accumulate) {
    const NoiseSample s = noise_from_draws(src, draws, 0, std::nullopt, kFrozen);
    const double v = (s.eps.array() * weights.array()).sum() + model.lambda * noise_penalty(src, s);
    if (accumulate) {
      noise_backward(src, s, weights);
      noise_penalty_backward(src, s, model.lambda);
    }
    return v;
  };
  return gradient_check(fn, src.params, h);
}

struct EndToEnd {
  TrainConfig cfg;
  std::unique_ptr<TrainState> state;
  RealMatrix real;
  RealMatrix z;
  RealMatrix draws;
};

EndToEnd end_to_end_setup(NoiseKind noise, LossMode loss, BatchMode batch_mode, BnMode bn,
                          std::uint64_t seed) {
  EndToEnd e;
  e.cfg.batch = 4;
  e.cfg.iters = 10;
  e.cfg.loss_mode = loss;
  e.cfg.batch_mode = batch_mode;
  e.cfg.bn_mode = bn;
  e.cfg.noise.kind = noise;
  e.cfg.noise.sigma0 = 0.5;
  e.cfg.noise.lambda = 0.5;
  e.cfg.seed = seed;
  e.state = std::make_unique<TrainState>(init_state(e.cfg, small_net()));
  Rng rng(seed + 8);
  e.real = rng.normal_matrix(4, 2);
  e.z = rng.normal_matrix(4, 2);
  const std::size_t rows = noisy_rows(4, batch_mode, false);
  e.draws = rng.normal_matrix(rows, 2);
  return e;
}

std::optional<GradCheckResult> check_generator(LossMode loss, BatchMode batch_mode, BnMode bn,
                                               double h, std::uint64_t seed) {
  EndToEnd e = end_to_end_setup(NoiseKind::fixed_gaussian, loss, batch_mode, bn, seed);
  TrainState& s = *e.state;
  const RealMatrix eps = noise_from_draws(s.noise, e.draws, 0, e.cfg.iters, kFrozen).eps;
  const ScalarObjective fn = [&](ParamStore&, bool) {
    const double v = generator_pass(s, e.cfg, e.z, eps, kFrozen);
    s.discriminator.params.zero_grad();
    return v;
  };
  return conditioned_check(fn, s.generator.params, h);
}

std::optional<GradCheckResult> check_discriminator(double h, std::uint64_t seed) {
  EndToEnd e = end_to_end_setup(NoiseKind::fixed_gaussian, LossMode::nonsaturating,
                                BatchMode::double_batch, BnMode::per_branch, seed);
  TrainState& s = *e.state;
  const RealMatrix fake = s.generator.forward(e.z, {Mode::eval, false}).output;
  const NoiseSample noise = noise_from_draws(s.noise, e.draws, 0, e.cfg.iters, kFrozen);
  const ScalarObjective fn = [&](ParamStore&, bool) {
    return discriminator_pass(s, e.cfg, e.real, fake, noise, kFrozen).loss_d;
  };
  return conditioned_check(fn, s.discriminator.params, h);
}

std::optional<GradCheckResult> check_noise_generator(double h, std::uint64_t seed) {
  EndToEnd e = end_to_end_setup(NoiseKind::generator_network, LossMode::nonsaturating,
                                BatchMode::double_batch, BnMode::per_branch, seed);
  TrainState& s = *e.state;
  const RealMatrix fake = s.generator.forward(e.z, {Mode::eval, false}).output;
  const ScalarObjective fn = [&](ParamStore&, bool) {
    const NoiseSample noise = noise_from_draws(s.noise, e.draws, 0, e.cfg.iters, kFrozen);
    const DiscriminatorPass dp = discriminator_pass(s, e.cfg, e.real, fake, noise, kFrozen);
    s.discriminator.params.zero_grad();
    return dp.loss_d + dp.penalty;
  };
  return conditioned_check(fn, s.noise.params, h);
}

struct Component {
  std::string name;
  std::function<GradCheckResult(double)> run;
};

std::vector<Component> components() {
  std::vector<Component> c;
  for (Activation a : {Activation::relu, Activation::leaky_relu, Activation::tanh,
                       Activation::scaled_tanh, Activation::sigmoid, Activation::linear}) {
    c.push_back({"layer." + std::string(to_string(a)), [a](double h) { return check_layer(a, h); }});
  }
  c.push_back({"batchnorm", check_batchnorm});
  c.push_back({"loss.d_real",
               [](double h) { return check_loss(d_loss_real, 503, h); }});
  c.push_back({"loss.d_fake",
               [](double h) { return check_loss(d_loss_fake, 509, h); }});
  c.push_back({"loss.g_nonsaturating", [](double h) {
                 return check_loss(
                     [](const RealMatrix& a, const RealMatrix& b) {
                       return g_loss(a, b, LossMode::nonsaturating);
                     },
                     521, h);
               }});
  c.push_back({"loss.g_minimax", [](double h) {
                 return check_loss(
                     [](const RealMatrix& a, const RealMatrix& b) {
                       return g_loss(a, b, LossMode::minimax);
                     },
                     523, h);
               }});
  c.push_back({"penalty.learned_sigma",
               [](double h) { return check_penalty(NoiseKind::learned_sigma, h); }});
  c.push_back({"penalty.generator_network",
               [](double h) { return check_penalty(NoiseKind::generator_network, h); }});
  c.push_back({"end_to_end.generator", [](double h) {
                 return first_conditioned([h](std::uint64_t seed) {
                   return check_generator(LossMode::nonsaturating, BatchMode::double_batch,
                                          BnMode::per_branch, h, seed);
                 });
               }});
  c.push_back({"end_to_end.generator_minimax", [](double h) {
                 return first_conditioned([h](std::uint64_t seed) {
                   return check_generator(LossMode::minimax, BatchMode::double_batch,
                                          BnMode::per_branch, h, seed);
                 });
               }});
  c.push_back({"end_to_end.generator_half_mixed", [](double h) {
                 return first_conditioned([h](std::uint64_t seed) {
                   return check_generator(LossMode::nonsaturating, BatchMode::half_batch,
                                          BnMode::mixed, h, seed);
                 });
               }});
  c.push_back({"end_to_end.discriminator", [](double h) {
                 return first_conditioned(
                     [h](std::uint64_t seed) { return check_discriminator(h, seed); });
               }});
  c.push_back({"end_to_end.noise_generator", [](double h) {
                 return first_conditioned(
                     [h](std::uint64_t seed) { return check_noise_generator(h, seed); });
               }});
  return c;
}

bool matches(const std::string& name, std::string_view filter) {
  if (filter.empty() || name == filter) return true;
  return name.size() > filter.size() && name.compare(0, filter.size(), filter) == 0 &&
         name[filter.size()] == '.';
}

}  // namespace

std::vector<std::string> gradcheck_components() {
  std::vector<std::string> names;
  for (const Component& c : components()) names.push_back(c.name);
  return names;
}

std::vector<ComponentCheck> run_gradcheck_suite(std::string_view filter, double h) {
  std::vector<ComponentCheck> out;
  for (const Component& c : components()) {
    if (matches(c.name, filter)) out.push_back({c.name, c.run(h)});
  }
  if (out.empty()) throw ConfigError("unknown gradcheck component '" + std::string(filter) + "'");
  return out;
}

}  // namespace dfgan
