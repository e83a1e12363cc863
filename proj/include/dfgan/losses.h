#pragma once

#include <string_view>

#include "dfgan/matrix.h"

namespace dfgan {

/// Discriminator outputs are clamped into [kProbFloor, 1 - kProbFloor] before
/// the logarithm; the clamped region has zero gradient.
inline constexpr double kProbFloor = 1e-12;

enum class LossMode { minimax, nonsaturating };

std::string_view to_string(LossMode m);
LossMode parse_loss_mode(std::string_view name);

/// A summed log-loss over a clean and a noisy branch of discriminator outputs
/// (column vectors; either may have zero rows), with d(value)/d(D) per branch.
struct LossTerms {
  double value = 0.0;
  RealMatrix grad_clean;
  RealMatrix grad_noisy;
};

/// sum ln D; grad = 1/D inside the clamp range, 0 outside.
double sum_log(const RealMatrix& d, RealMatrix* grad = nullptr);
/// sum ln(1 - D); grad = -1/(1 - D) inside the clamp range, 0 outside.
double sum_log_complement(const RealMatrix& d, RealMatrix* grad = nullptr);

/// L_D^r = sum ln D(x_i) + ln D(x_i + eps_i)
LossTerms d_loss_real(const RealMatrix& d_clean, const RealMatrix& d_noisy);
/// L_D^f = sum ln(1 - D(x~_i)) + ln(1 - D(x~_i + eps_i))
LossTerms d_loss_fake(const RealMatrix& d_clean, const RealMatrix& d_noisy);
/// nonsaturating: sum ln D (generator ascends); minimax: sum ln(1 - D)
/// (generator descends).
LossTerms g_loss(const RealMatrix& d_clean, const RealMatrix& d_noisy, LossMode mode);

}  // namespace dfgan
