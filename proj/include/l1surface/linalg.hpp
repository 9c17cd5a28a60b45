#pragma once

#include <Eigen/Core>

namespace l1surface {

/// Dense row-major matrix. Rows of basis and constraint matrices are contiguous,
/// which is what the kernels and row extraction want.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace l1surface
