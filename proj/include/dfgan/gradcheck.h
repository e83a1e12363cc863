#pragma once

#include <functional>
#include <string>

#include "dfgan/param_store.h"

namespace dfgan {

/// A deterministic scalar function of `params`. When `accumulate_grads` is
/// true it must also add its analytic gradient into params' grad slots.
using ScalarObjective = std::function<double(ParamStore& params, bool accumulate_grads)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  long worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Central-difference check of every trainable scalar in `params`:
///   max |analytic - fd| / max(|analytic|, |fd|, 1e-12).
/// Throws NumericError if two evaluations at the same point disagree.
GradCheckResult gradient_check(const ScalarObjective& fn, ParamStore& params, double h = 1e-5);

}  // namespace dfgan
