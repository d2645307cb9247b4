#pragma once

#include <Eigen/Dense>

namespace orl {

using Vec = Eigen::VectorXd;
/// Column-major batch: one sample per column.
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace orl
