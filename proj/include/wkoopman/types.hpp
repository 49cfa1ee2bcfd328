#pragma once

#include <Eigen/Dense>

namespace wkoopman {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A list of states stored one per row.
using PointSet = Eigen::MatrixXd;

}  // namespace wkoopman
