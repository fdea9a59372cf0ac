#pragma once

#include <Eigen/Dense>

namespace ledsim {

/// Node-stacked quantities: row i holds the m-vector owned by node i.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace ledsim
