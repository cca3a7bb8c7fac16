#pragma once

#include <Eigen/Dense>

namespace parapack {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace parapack
