#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dfgan/gradcheck.h"

namespace dfgan {

inline constexpr double kGradcheckTolerance = 1e-4;

struct ComponentCheck {
  std::string name;
  GradCheckResult result;
  bool passed() const { return result.max_rel_error < kGradcheckTolerance; }
};

/// Names of all checked components, e.g. "layer.relu", "batchnorm",
/// "loss.d_real", "penalty.learned_sigma", "end_to_end.generator".
std::vector<std::string> gradcheck_components();

/// Runs the components whose name equals `filter` or starts with
/// "<filter>."; an empty filter runs everything. Unknown filters throw
/// ConfigError.
std::vector<ComponentCheck> run_gradcheck_suite(std::string_view filter = {}, double h = 1e-5);

}  // namespace dfgan
