#pragma once

#include "dfgan/matrix.h"

namespace dfgan {

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

struct BatchNormCache {
  RealMatrix normalized;  // x_hat, before the affine transform
  RowVector inv_std;      // 1 / sqrt(var + eps) per column
  RowVector gamma;
};

struct BatchNormForward {
  RealMatrix output;
  BatchNormCache cache;
  RowVector batch_mean;
  RowVector batch_var;  // population variance
};

/// Normalizes every column with its own batch mean and population variance,
/// then applies y = gamma * x_hat + beta. Throws DegenerateBatchError on
/// batches with fewer than two rows.
BatchNormForward batchnorm_forward(const RealMatrix& batch, const RowVector& gamma,
                                   const RowVector& beta, double eps = kBatchNormEps);

/// Inference-time normalization with fixed statistics.
RealMatrix batchnorm_inference(const RealMatrix& batch, const RowVector& gamma,
                               const RowVector& beta, const RowVector& running_mean,
                               const RowVector& running_var, double eps = kBatchNormEps);

struct BatchNormGrads {
  RealMatrix input;
  RowVector gamma;
  RowVector beta;
};

BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const RealMatrix& upstream);

}  // namespace dfgan
