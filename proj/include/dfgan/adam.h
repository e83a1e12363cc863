#pragma once

#include <cstdint>
#include <vector>

#include "dfgan/param_store.h"

namespace dfgan {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

enum class Direction { ascend, descend };

/// First/second moments per store entry plus one shared step counter.
struct AdamState {
  std::vector<RealMatrix> m;
  std::vector<RealMatrix> v;
  std::uint64_t step = 0;

  static AdamState for_store(const ParamStore& params);
};

/// Bias-corrected Adam update of every trainable entry, moving along +grad
/// (ascend) or -grad (descend). Gradients are zeroed afterwards. Throws
/// NumericError naming the parameter if an update is not finite; in that case
/// no parameter is modified.
void adam_step(ParamStore& params, AdamState& state, const AdamConfig& cfg, Direction direction);

}  // namespace dfgan
