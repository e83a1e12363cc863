#include "dfgan/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dfgan/errors.h"

namespace dfgan {

GradCheckResult gradient_check(const ScalarObjective& fn, ParamStore& params, double h) {
  if (!(h > 0.0)) throw ConfigError("gradient_check: step h must be positive");

  params.zero_grad();
  const double base = fn(params, true);
  std::vector<RealMatrix> analytic;
  analytic.reserve(params.size());
  for (const auto& e : params.entries()) analytic.push_back(e.grad);
  params.zero_grad();

  const double again = fn(params, false);
  if (base != again && !(std::isnan(base) && std::isnan(again))) {
    throw NumericError("gradient_check: objective is not deterministic (" + std::to_string(base) +
                       " vs " + std::to_string(again) + ")");
  }

  GradCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params.entry(i).trainable) continue;
    const std::string name = params.entry(i).name;
    const Eigen::Index n = params.entry(i).value.size();
    for (Eigen::Index k = 0; k < n; ++k) {
      const double original = params.entry(i).value.data()[k];
      params.mutable_value(name).data()[k] = original + h;
      const double plus = fn(params, false);
      params.mutable_value(name).data()[k] = original - h;
      const double minus = fn(params, false);
      params.mutable_value(name).data()[k] = original;

      const double numeric = (plus - minus) / (2.0 * h);
      const double exact = analytic[i].data()[k];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-12});
      const double rel = std::abs(exact - numeric) / denom;
      ++result.checked;
      if (rel > result.max_rel_error || std::isnan(rel)) {
        result.max_rel_error = std::isnan(rel) ? std::numeric_limits<double>::infinity() : rel;
        result.worst_param = name;
        result.worst_index = static_cast<long>(k);
        result.worst_analytic = exact;
        result.worst_numeric = numeric;
      }
    }
  }
  params.zero_grad();
  return result;
}

}  // namespace dfgan
