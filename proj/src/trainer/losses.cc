#include "dfgan/losses.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "dfgan/errors.h"

namespace dfgan {

std::string_view to_string(LossMode m) {
  return m == LossMode::minimax ? "minimax" : "nonsaturating";
}

LossMode parse_loss_mode(std::string_view name) {
  if (name == "minimax") return LossMode::minimax;
  if (name == "nonsaturating") return LossMode::nonsaturating;
  throw ConfigError("train.loss_mode: unknown value '" + std::string(name) +
                    "' (expected minimax or nonsaturating)");
}

double sum_log(const RealMatrix& d, RealMatrix* grad) {
  if (grad) grad->resize(d.rows(), d.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double v = d.data()[i];
    const bool clamped = v < kProbFloor || v > 1.0 - kProbFloor;
    const double c = std::clamp(v, kProbFloor, 1.0 - kProbFloor);
    total += std::log(c);
    if (grad) grad->data()[i] = clamped ? 0.0 : 1.0 / c;
  }
  return total;
}

double sum_log_complement(const RealMatrix& d, RealMatrix* grad) {
  if (grad) grad->resize(d.rows(), d.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double v = d.data()[i];
    const bool clamped = v < kProbFloor || v > 1.0 - kProbFloor;
    const double c = std::clamp(v, kProbFloor, 1.0 - kProbFloor);
    total += std::log(1.0 - c);
    if (grad) grad->data()[i] = clamped ? 0.0 : -1.0 / (1.0 - c);
  }
  return total;
}

namespace {

template <typename Fn>
LossTerms two_branch(const RealMatrix& clean, const RealMatrix& noisy, Fn term) {
  LossTerms t;
  const double a = term(clean, &t.grad_clean);
  const double b = term(noisy, &t.grad_noisy);
  t.value = a + b;
  return t;
}

}  // namespace

LossTerms d_loss_real(const RealMatrix& d_clean, const RealMatrix& d_noisy) {
  return two_branch(d_clean, d_noisy, sum_log);
}

LossTerms d_loss_fake(const RealMatrix& d_clean, const RealMatrix& d_noisy) {
  return two_branch(d_clean, d_noisy, sum_log_complement);
}

LossTerms g_loss(const RealMatrix& d_clean, const RealMatrix& d_noisy, LossMode mode) {
  return mode == LossMode::nonsaturating ? two_branch(d_clean, d_noisy, sum_log)
                                         : two_branch(d_clean, d_noisy, sum_log_complement);
}

}  // namespace dfgan
