#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dfgan/adam.h"
#include "dfgan/losses.h"
#include "dfgan/metrics.h"
#include "dfgan/networks.h"
#include "dfgan/noise.h"
#include "dfgan/rng.h"
#include "dfgan/synthdata.h"

namespace dfgan {

enum class BatchMode { double_batch, half_batch };
enum class BnMode { per_branch, mixed };

std::string_view to_string(BatchMode m);
BatchMode parse_batch_mode(std::string_view name);
std::string_view to_string(BnMode m);
BnMode parse_bn_mode(std::string_view name);

struct TrainConfig {
  std::size_t iters = 20000;
  std::size_t batch = 64;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t n_disc = 1;
  LossMode loss_mode = LossMode::nonsaturating;
  BatchMode batch_mode = BatchMode::double_batch;
  BnMode bn_mode = BnMode::per_branch;
  NoiseModel noise;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1000;

  AdamConfig adam() const { return {lr, beta1, beta2, adam_eps}; }
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct EvalConfig {
  std::size_t eval_samples = 2048;
  std::size_t bins = 32;
  HistogramRange range;
  double smoothing = 1e-6;
  std::size_t min_count = 20;
  bool record_wall_time = false;

  void validate() const;
  bool operator==(const EvalConfig&) const = default;
};

/// Training samples plus an independent held-out set for evaluation.
struct TrainData {
  Dataset train;
  RealMatrix heldout;
};

/// Independent random streams of one run, all derived from the run seed.
struct RngStreams {
  Rng data;
  Rng latent;
  Rng noise;

  static RngStreams from_seed(std::uint64_t seed);
  bool operator==(const RngStreams&) const = default;
};

/// Fixed inputs for the generator-gradient diagnostic.
struct ProbeBatch {
  RealMatrix z;
  RealMatrix noise_draws;
};

struct TrainState {
  Network generator;
  Network discriminator;
  NoiseSource noise;
  AdamState adam_g;
  AdamState adam_d;
  AdamState adam_n;
  RngStreams rng;
  ProbeBatch probe;
  std::size_t iteration = 0;
};

/// Fresh networks and optimizer state for a run. Network seeds and random
/// streams are derived from cfg.seed.
TrainState init_state(const TrainConfig& cfg, const NetConfig& net);

/// Regenerates the probe batch from the run seed (not part of checkpoints).
ProbeBatch make_probe_batch(const TrainConfig& cfg, const TrainState& state);

/// Discriminator inputs of one update. Empty branches have zero rows.
struct Branches {
  RealMatrix clean;
  RealMatrix noisy;
};

/// Number of rows of epsilon one side needs for a batch of m samples.
std::size_t noisy_rows(std::size_t m, BatchMode mode, bool noisy_only);

/// double: all m clean plus all m shifted by eps; half: the first m/2 rows
/// clean and the remaining rows shifted; noisy_only: all m shifted.
Branches make_branches(const RealMatrix& x, const RealMatrix& eps, BatchMode mode,
                       bool noisy_only);

/// Discriminator evaluated on a list of inputs, either each as its own batch
/// or concatenated into one.
struct BranchPass {
  std::vector<RealMatrix> outputs;
  std::vector<Tape> tapes;
  std::vector<Eigen::Index> rows;
  BnMode bn_mode = BnMode::per_branch;
};

BranchPass forward_branches(Network& d, std::span<const RealMatrix* const> inputs, BnMode bn_mode,
                            ForwardOptions options = {});

/// Accumulates discriminator gradients and returns d(loss)/d(input) per branch.
std::vector<RealMatrix> backward_branches(const BranchPass& pass,
                                          std::span<const RealMatrix> upstream);

/// L_D^r + L_D^f on the given samples with shared eps (no parameter update;
/// batchnorm runs in train mode without touching running statistics).
double discriminator_objective(TrainState& state, const TrainConfig& cfg, const RealMatrix& real,
                               const RealMatrix& fake, const RealMatrix& eps);

struct DiscriminatorPass {
  double loss_d = 0.0;   // L_D^r + L_D^f
  double penalty = 0.0;  // lambda * L_eps as seen by the noise generator
  double loss_eps = 0.0; // sum_i |eps_i|^2
};

/// One discriminator evaluation on shared eps. Accumulates d(L_D)/d(phi) into
/// the discriminator and, for a trainable noise source, d(L_D + penalty)/d(omega)
/// into the noise parameters. No optimizer step.
DiscriminatorPass discriminator_pass(TrainState& state, const TrainConfig& cfg,
                                     const RealMatrix& real, const RealMatrix& fake,
                                     const NoiseSample& noise, ForwardOptions options = {});

/// L_G on G(z) with eps. Accumulates d(L_G)/d(theta) into the generator (the
/// discriminator's slots receive gradients as well). No optimizer step.
double generator_pass(TrainState& state, const TrainConfig& cfg, const RealMatrix& z,
                      const RealMatrix& eps, ForwardOptions options = {});

struct StepLosses {
  double loss_d = 0.0;
  double loss_g = 0.0;
  double loss_eps = 0.0;
};

/// One outer iteration: n_disc discriminator/noise updates then one generator
/// update. Advances state.iteration.
StepLosses train_step(TrainState& state, const TrainConfig& cfg, const RealMatrix& data);

/// L2 norm of d(L_G)/d(theta) on the probe batch. Leaves parameters, running
/// statistics and gradients untouched.
double generator_grad_norm(TrainState& state, const TrainConfig& cfg, const ProbeBatch& probe);

/// Generated samples with the generator in eval mode.
RealMatrix generate_samples(TrainState& state, std::size_t count, Rng& rng);

MetricsRecord evaluate(TrainState& state, const TrainConfig& cfg, const EvalConfig& eval,
                       const TrainData& data, const StepLosses& losses);

struct TrainHooks {
  std::function<void(const MetricsRecord&)> on_record;
  /// Called after every completed iteration.
  std::function<void(const TrainState&)> on_iteration;
};

/// Runs iterations state.iteration .. cfg.iters and returns the records.
/// Records are emitted at multiples of eval_every plus once at the end.
std::vector<MetricsRecord> run_training(const TrainConfig& cfg, const EvalConfig& eval,
                                        const TrainData& data, TrainState& state,
                                        const TrainHooks& hooks = {});

}  // namespace dfgan
