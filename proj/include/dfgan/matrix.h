#pragma once

#include <Eigen/Core>

namespace dfgan {

/// Dense row-major batch of 64-bit reals. Rows are examples, columns features.
using RealMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealVector = Eigen::VectorXd;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

}  // namespace dfgan
