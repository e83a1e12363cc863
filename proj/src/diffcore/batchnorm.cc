#include "dfgan/batchnorm.h"

#include <string>

#include "dfgan/errors.h"

namespace dfgan {

namespace {

void check_params(const RealMatrix& batch, const RowVector& gamma, const RowVector& beta) {
  if (gamma.size() != batch.cols() || beta.size() != batch.cols()) {
    throw ConfigError("batchnorm: gamma/beta length " + std::to_string(gamma.size()) + "/" +
                      std::to_string(beta.size()) + " does not match " +
                      std::to_string(batch.cols()) + " columns");
  }
}

}  // namespace

BatchNormForward batchnorm_forward(const RealMatrix& batch, const RowVector& gamma,
                                   const RowVector& beta, double eps) {
  check_params(batch, gamma, beta);
  if (!(eps > 0.0)) throw ConfigError("batchnorm: eps must be positive");
  if (batch.rows() < 2) {
    throw DegenerateBatchError("batchnorm: train-mode batch needs at least 2 rows, got " +
                               std::to_string(batch.rows()));
  }
  const double n = static_cast<double>(batch.rows());

  BatchNormForward out;
  out.batch_mean = batch.colwise().sum() / n;
  RealMatrix centered = batch.rowwise() - out.batch_mean;
  out.batch_var = centered.colwise().squaredNorm() / n;
  out.cache.inv_std = (out.batch_var.array() + eps).rsqrt().matrix();
  out.cache.normalized = centered.array().rowwise() * out.cache.inv_std.array();
  out.cache.gamma = gamma;
  out.output = (out.cache.normalized.array().rowwise() * gamma.array()).rowwise() + beta.array();
  return out;
}

RealMatrix batchnorm_inference(const RealMatrix& batch, const RowVector& gamma,
                               const RowVector& beta, const RowVector& running_mean,
                               const RowVector& running_var, double eps) {
  check_params(batch, gamma, beta);
  const RowVector scale = gamma.array() * (running_var.array() + eps).rsqrt();
  const RowVector shift = beta.array() - running_mean.array() * scale.array();
  return (batch.array().rowwise() * scale.array()).rowwise() + shift.array();
}

BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const RealMatrix& upstream) {
  if (upstream.rows() != cache.normalized.rows() || upstream.cols() != cache.normalized.cols()) {
    throw ConfigError("batchnorm_backward: upstream shape mismatch");
  }
  const double n = static_cast<double>(upstream.rows());
  BatchNormGrads g;
  g.beta = upstream.colwise().sum();
  g.gamma = (upstream.array() * cache.normalized.array()).colwise().sum();

  // d x_hat = dy * gamma; dx = inv_std / n * (n dx_hat - sum dx_hat - x_hat sum(dx_hat x_hat))
  const RealMatrix dxhat = upstream.array().rowwise() * cache.gamma.array();
  const RowVector sum_dxhat = dxhat.colwise().sum();
  const RowVector sum_dxhat_xhat = (dxhat.array() * cache.normalized.array()).colwise().sum();
  RealMatrix centered = (n * dxhat).rowwise() - sum_dxhat;
  centered.array() -= cache.normalized.array().rowwise() * sum_dxhat_xhat.array();
  g.input = centered.array().rowwise() * (cache.inv_std.array() / n);
  return g;
}

}  // namespace dfgan
