#include "dfgan/train.h"

#include <chrono>
#include <cmath>
#include <string>

#include "dfgan/errors.h"

namespace dfgan {

namespace {

constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kLatentStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr std::uint64_t kProbeStream = 4;
constexpr std::uint64_t kEvalStream = 5;
constexpr std::uint64_t kGeneratorInit = 10;
constexpr std::uint64_t kDiscriminatorInit = 11;
constexpr std::uint64_t kNoiseInit = 12;

RealMatrix sample_rows(const RealMatrix& samples, std::size_t m, Rng& rng) {
  RealMatrix x(static_cast<Eigen::Index>(m), samples.cols());
  const auto n = static_cast<std::size_t>(samples.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x.row(i) = samples.row(static_cast<Eigen::Index>(rng.index(n)));
  }
  return x;
}

std::size_t noise_input_cols(const NoiseSource& src) {
  return src.model.kind == NoiseKind::generator_network ? src.latent_dim : src.data_dim;
}

NoiseSample draw_noise(TrainState& state, const TrainConfig& cfg, std::size_t rows,
                       ForwardOptions options) {
  if (rows == 0) {
    NoiseSample s;
    s.eps = RealMatrix::Zero(0, static_cast<Eigen::Index>(state.noise.data_dim));
    return s;
  }
  return sample_noise(state.noise, rows, state.rng.noise, state.iteration, cfg.iters, options);
}

// d(loss)/d(x) for the sample matrix that produced both branches.
RealMatrix merge_branch_grads(const RealMatrix& clean, const RealMatrix& noisy, std::size_t m,
                              BatchMode mode, bool noisy_only) {
  if (noisy_only) return noisy;
  if (mode == BatchMode::double_batch) return clean + noisy;
  RealMatrix g(static_cast<Eigen::Index>(m), clean.cols());
  g << clean, noisy;
  return g;
}

}  // namespace

std::string_view to_string(BatchMode m) {
  return m == BatchMode::double_batch ? "double" : "half";
}

BatchMode parse_batch_mode(std::string_view name) {
  if (name == "double") return BatchMode::double_batch;
  if (name == "half") return BatchMode::half_batch;
  throw ConfigError("train.batch_mode: unknown value '" + std::string(name) +
                    "' (expected double or half)");
}

std::string_view to_string(BnMode m) { return m == BnMode::per_branch ? "per_branch" : "mixed"; }

BnMode parse_bn_mode(std::string_view name) {
  if (name == "per_branch") return BnMode::per_branch;
  if (name == "mixed") return BnMode::mixed;
  throw ConfigError("train.separate_bn: unknown value '" + std::string(name) +
                    "' (expected per_branch or mixed)");
}

void TrainConfig::validate() const {
  if (iters < 1) throw ConfigError("train.iters must be >= 1");
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  if (n_disc < 1) throw ConfigError("train.n_disc must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("train.beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train.beta2 must be in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be > 0");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
  if (batch_mode == BatchMode::half_batch && !noise.noisy_only && batch < 2) {
    throw ConfigError("train.batch must be >= 2 with batch_mode half");
  }
  noise.validate();
}

void EvalConfig::validate() const {
  if (eval_samples < 1) throw ConfigError("metrics.eval_samples must be >= 1");
  if (bins < 2) throw ConfigError("metrics.bins must be >= 2");
  if (!(range.hi > range.lo)) throw ConfigError("metrics.range must satisfy lo < hi");
  if (!(smoothing >= 0.0)) throw ConfigError("metrics.smoothing must be >= 0");
  if (min_count < 1) throw ConfigError("metrics.min_count must be >= 1");
}

RngStreams RngStreams::from_seed(std::uint64_t seed) {
  return {Rng(mix_seed(seed, kDataStream)), Rng(mix_seed(seed, kLatentStream)),
          Rng(mix_seed(seed, kNoiseStream))};
}

TrainState init_state(const TrainConfig& cfg, const NetConfig& net) {
  cfg.validate();
  net.validate();
  TrainState s{build_generator(net, mix_seed(cfg.seed, kGeneratorInit)),
               build_discriminator(net, mix_seed(cfg.seed, kDiscriminatorInit)),
               build_noise_source(net, cfg.noise, mix_seed(cfg.seed, kNoiseInit)),
               {},
               {},
               {},
               RngStreams::from_seed(cfg.seed),
               {},
               0};
  s.adam_g = AdamState::for_store(s.generator.params);
  s.adam_d = AdamState::for_store(s.discriminator.params);
  s.adam_n = AdamState::for_store(s.noise.params);
  s.probe = make_probe_batch(cfg, s);
  return s;
}

ProbeBatch make_probe_batch(const TrainConfig& cfg, const TrainState& state) {
  Rng rng(mix_seed(cfg.seed, kProbeStream));
  ProbeBatch p;
  p.z = rng.normal_matrix(cfg.batch, state.generator.in_dim());
  p.noise_draws = rng.normal_matrix(noisy_rows(cfg.batch, cfg.batch_mode, cfg.noise.noisy_only),
                                    noise_input_cols(state.noise));
  return p;
}

std::size_t noisy_rows(std::size_t m, BatchMode mode, bool noisy_only) {
  if (noisy_only || mode == BatchMode::double_batch) return m;
  return m - m / 2;
}

Branches make_branches(const RealMatrix& x, const RealMatrix& eps, BatchMode mode,
                       bool noisy_only) {
  const auto m = static_cast<std::size_t>(x.rows());
  const auto rows = static_cast<Eigen::Index>(noisy_rows(m, mode, noisy_only));
  if (eps.rows() != rows || eps.cols() != x.cols()) {
    throw ConfigError("make_branches: eps has shape " + std::to_string(eps.rows()) + "x" +
                      std::to_string(eps.cols()) + ", expected " + std::to_string(rows) + "x" +
                      std::to_string(x.cols()));
  }
  Branches b;
  const Eigen::Index clean_rows = noisy_only ? 0 : (mode == BatchMode::double_batch ? x.rows() : x.rows() - rows);
  b.clean = x.topRows(clean_rows);
  b.noisy = x.bottomRows(rows) + eps;
  return b;
}

BranchPass forward_branches(Network& d, std::span<const RealMatrix* const> inputs, BnMode bn_mode,
                            ForwardOptions options) {
  BranchPass pass;
  pass.bn_mode = bn_mode;
  Eigen::Index total = 0;
  for (const RealMatrix* in : inputs) {
    pass.rows.push_back(in->rows());
    total += in->rows();
  }
  if (total == 0) throw ConfigError("forward_branches: all branches are empty");

  if (bn_mode == BnMode::per_branch) {
    for (const RealMatrix* in : inputs) {
      if (in->rows() == 0) {
        pass.outputs.emplace_back(0, static_cast<Eigen::Index>(d.out_dim()));
        pass.tapes.emplace_back();
        continue;
      }
      ForwardResult r = d.forward(*in, options);
      pass.outputs.push_back(std::move(r.output));
      pass.tapes.push_back(std::move(r.tape));
    }
    return pass;
  }

  RealMatrix all(total, inputs.front()->cols());
  Eigen::Index at = 0;
  for (const RealMatrix* in : inputs) {
    all.middleRows(at, in->rows()) = *in;
    at += in->rows();
  }
  ForwardResult r = d.forward(all, options);
  at = 0;
  for (Eigen::Index rows : pass.rows) {
    pass.outputs.emplace_back(r.output.middleRows(at, rows));
    at += rows;
  }
  pass.tapes.push_back(std::move(r.tape));
  return pass;
}

std::vector<RealMatrix> backward_branches(const BranchPass& pass,
                                          std::span<const RealMatrix> upstream) {
  if (upstream.size() != pass.rows.size()) {
    throw ConfigError("backward_branches: expected one upstream gradient per branch");
  }
  std::vector<RealMatrix> grads;
  if (pass.bn_mode == BnMode::per_branch) {
    for (std::size_t i = 0; i < upstream.size(); ++i) {
      if (pass.rows[i] == 0) {
        grads.emplace_back(0, 0);
        continue;
      }
      grads.push_back(mlp_backward(pass.tapes[i], upstream[i]));
    }
    return grads;
  }
  Eigen::Index total = 0;
  for (Eigen::Index rows : pass.rows) total += rows;
  RealMatrix all(total, upstream.front().cols());
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    if (pass.rows[i] > 0) all.middleRows(at, pass.rows[i]) = upstream[i];
    at += pass.rows[i];
  }
  const RealMatrix g = mlp_backward(pass.tapes.front(), all);
  at = 0;
  for (Eigen::Index rows : pass.rows) {
    grads.emplace_back(g.middleRows(at, rows));
    at += rows;
  }
  return grads;
}

double discriminator_objective(TrainState& state, const TrainConfig& cfg, const RealMatrix& real,
                               const RealMatrix& fake, const RealMatrix& eps) {
  const Branches rb = make_branches(real, eps, cfg.batch_mode, cfg.noise.noisy_only);
  const Branches fb = make_branches(fake, eps, cfg.batch_mode, cfg.noise.noisy_only);
  const RealMatrix* inputs[] = {&rb.clean, &rb.noisy, &fb.clean, &fb.noisy};
  const BranchPass pass =
      forward_branches(state.discriminator, inputs, cfg.bn_mode, {Mode::train, false});
  const LossTerms lr = d_loss_real(pass.outputs[0], pass.outputs[1]);
  const LossTerms lf = d_loss_fake(pass.outputs[2], pass.outputs[3]);
  return lr.value + lf.value;
}

DiscriminatorPass discriminator_pass(TrainState& state, const TrainConfig& cfg,
                                     const RealMatrix& real, const RealMatrix& fake,
                                     const NoiseSample& noise, ForwardOptions options) {
  const Branches rb = make_branches(real, noise.eps, cfg.batch_mode, cfg.noise.noisy_only);
  const Branches fb = make_branches(fake, noise.eps, cfg.batch_mode, cfg.noise.noisy_only);
  const RealMatrix* inputs[] = {&rb.clean, &rb.noisy, &fb.clean, &fb.noisy};
  const BranchPass pass = forward_branches(state.discriminator, inputs, cfg.bn_mode, options);
  const LossTerms lr = d_loss_real(pass.outputs[0], pass.outputs[1]);
  const LossTerms lf = d_loss_fake(pass.outputs[2], pass.outputs[3]);
  const RealMatrix upstream[] = {lr.grad_clean, lr.grad_noisy, lf.grad_clean, lf.grad_noisy};
  const std::vector<RealMatrix> grads = backward_branches(pass, upstream);

  DiscriminatorPass out;
  out.loss_d = lr.value + lf.value;
  out.loss_eps = noise.eps.squaredNorm();
  const auto rows = static_cast<double>(noise.eps.rows());
  if (state.noise.trainable() && noise.eps.rows() > 0) {
    // The same eps_i enters x_i + eps_i and x~_i + eps_i.
    noise_backward(state.noise, noise, grads[1] + grads[3]);
    out.penalty = cfg.noise.lambda * rows * noise_penalty(state.noise, noise);
    noise_penalty_backward(state.noise, noise, cfg.noise.lambda * rows);
  }
  return out;
}

double generator_pass(TrainState& state, const TrainConfig& cfg, const RealMatrix& z,
                      const RealMatrix& eps, ForwardOptions options) {
  const std::size_t m = static_cast<std::size_t>(z.rows());
  ForwardResult fake = state.generator.forward(z, options);
  const Branches fb = make_branches(fake.output, eps, cfg.batch_mode, cfg.noise.noisy_only);
  const RealMatrix* inputs[] = {&fb.clean, &fb.noisy};
  const BranchPass pass = forward_branches(state.discriminator, inputs, cfg.bn_mode, options);
  const LossTerms loss = g_loss(pass.outputs[0], pass.outputs[1], cfg.loss_mode);
  const RealMatrix upstream[] = {loss.grad_clean, loss.grad_noisy};
  const std::vector<RealMatrix> grads = backward_branches(pass, upstream);
  mlp_backward(fake.tape,
               merge_branch_grads(grads[0], grads[1], m, cfg.batch_mode, cfg.noise.noisy_only));
  return loss.value;
}

StepLosses train_step(TrainState& state, const TrainConfig& cfg, const RealMatrix& data) {
  const std::size_t m = cfg.batch;
  const std::size_t rows = noisy_rows(m, cfg.batch_mode, cfg.noise.noisy_only);
  const AdamConfig adam = cfg.adam();
  StepLosses losses;

  for (std::size_t k = 0; k < cfg.n_disc; ++k) {
    const RealMatrix real = sample_rows(data, m, state.rng.data);
    const RealMatrix z = sample_latent(state.generator.in_dim(), m, state.rng.latent);
    const RealMatrix fake = state.generator.forward(z).output;
    const NoiseSample ns = draw_noise(state, cfg, rows, {});
    const DiscriminatorPass dp = discriminator_pass(state, cfg, real, fake, ns);
    losses.loss_d = dp.loss_d;
    losses.loss_eps = dp.loss_eps;
    if (!std::isfinite(losses.loss_d)) throw NumericError("discriminator loss is not finite");
    adam_step(state.discriminator.params, state.adam_d, adam, Direction::ascend);
    if (state.noise.trainable()) {
      adam_step(state.noise.params, state.adam_n, adam, Direction::descend);
    }
  }

  const RealMatrix z = sample_latent(state.generator.in_dim(), m, state.rng.latent);
  const NoiseSample ns = draw_noise(state, cfg, rows, {});
  losses.loss_g = generator_pass(state, cfg, z, ns.eps);
  if (!std::isfinite(losses.loss_g)) throw NumericError("generator loss is not finite");
  state.discriminator.params.zero_grad();
  state.noise.params.zero_grad();
  adam_step(state.generator.params, state.adam_g, adam,
            cfg.loss_mode == LossMode::nonsaturating ? Direction::ascend : Direction::descend);
  ++state.iteration;
  return losses;
}

double generator_grad_norm(TrainState& state, const TrainConfig& cfg, const ProbeBatch& probe) {
  const ForwardOptions frozen{Mode::train, false};
  RealMatrix eps;
  if (probe.noise_draws.rows() == 0) {
    eps = RealMatrix::Zero(0, static_cast<Eigen::Index>(state.noise.data_dim));
  } else {
    eps = noise_from_draws(state.noise, probe.noise_draws, state.iteration, cfg.iters, frozen).eps;
  }
  state.generator.params.zero_grad();
  state.discriminator.params.zero_grad();
  generator_pass(state, cfg, probe.z, eps, frozen);
  const double norm = std::sqrt(state.generator.params.grad_squared_norm());
  state.generator.params.zero_grad();
  state.discriminator.params.zero_grad();
  return norm;
}

RealMatrix generate_samples(TrainState& state, std::size_t count, Rng& rng) {
  const RealMatrix z = sample_latent(state.generator.in_dim(), count, rng);
  return state.generator.forward(z, {Mode::eval, false}).output;
}

MetricsRecord evaluate(TrainState& state, const TrainConfig& cfg, const EvalConfig& eval,
                       const TrainData& data, const StepLosses& losses) {
  MetricsRecord r;
  r.iter = state.iteration;
  r.loss_d = losses.loss_d;
  r.loss_g = losses.loss_g;
  r.loss_eps = losses.loss_eps;
  r.grad_norm_g = generator_grad_norm(state, cfg, state.probe);
  r.sigma = noise_sigma(state.noise, state.iteration, cfg.iters);

  Rng rng(mix_seed(mix_seed(cfg.seed, kEvalStream), state.iteration));
  const RealMatrix fake = generate_samples(state, eval.eval_samples, rng);
  const Eigen::Index held =
      std::min<Eigen::Index>(data.heldout.rows(), static_cast<Eigen::Index>(eval.eval_samples));
  const HistogramRange range[] = {eval.range};
  r.hist_jsd = histogram_jsd(data.heldout.topRows(held), fake, eval.bins, range, eval.smoothing);
  const ModeCoverage mc =
      mode_coverage(fake, data.train.centers, data.train.mode_std, eval.min_count);
  r.modes_covered = mc.covered;
  r.hq_fraction = mc.hq_fraction;
  return r;
}

std::vector<MetricsRecord> run_training(const TrainConfig& cfg, const EvalConfig& eval,
                                        const TrainData& data, TrainState& state,
                                        const TrainHooks& hooks) {
  cfg.validate();
  eval.validate();
  if (data.train.samples.rows() < 1 || data.heldout.rows() < 1) {
    throw ConfigError("run_training: training and held-out sets must be non-empty");
  }
  if (static_cast<std::size_t>(data.train.samples.cols()) != state.generator.out_dim()) {
    throw ConfigError("run_training: dataset dimension does not match model.data_dim");
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<MetricsRecord> records;
  StepLosses last;
  while (state.iteration < cfg.iters) {
    const std::size_t iter = state.iteration;
    try {
      last = train_step(state, cfg, data.train.samples);
      if (hooks.on_iteration) hooks.on_iteration(state);
      if (state.iteration % cfg.eval_every == 0 || state.iteration == cfg.iters) {
        MetricsRecord r = evaluate(state, cfg, eval, data, last);
        if (eval.record_wall_time) {
          r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                start)
                          .count();
        }
        records.push_back(r);
        if (hooks.on_record) hooks.on_record(r);
      }
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(iter) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace dfgan
