#include "parapack/kirchhoff_oracle.hpp"

#include <cmath>
#include <sstream>

#include "parapack/errors.hpp"

namespace parapack::oracle {

namespace {

constexpr double kPivotTolerance = 1e-14;
constexpr double kResidualTolerance = 1e-10;

Eigen::PartialPivLU<Matrix> factorize(const Matrix& lhs) {
  if (lhs.rows() != lhs.cols() || lhs.rows() == 0) {
    throw ShapeError("linear system matrix must be square and non-empty");
  }
  if (!lhs.allFinite()) {
    throw ParameterError("linear system matrix has non-finite entries");
  }
  const double scale = lhs.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    throw SingularMatrixError("zero matrix", 0);
  }
  Eigen::PartialPivLU<Matrix> lu(lhs);
  const auto& packed = lu.matrixLU();
  for (Eigen::Index k = 0; k < packed.rows(); ++k) {
    if (std::abs(packed(k, k)) <= kPivotTolerance * scale) {
      throw SingularMatrixError("singular matrix in LU factorisation", static_cast<std::size_t>(k));
    }
  }
  return lu;
}

Vector checked_solve(const Eigen::PartialPivLU<Matrix>& lu, const Matrix& lhs, const Vector& rhs) {
  Vector x = lu.solve(rhs);
  const double residual = (lhs * x - rhs).cwiseAbs().maxCoeff();
  const double bound = kResidualTolerance * rhs.cwiseAbs().maxCoeff();
  if (residual > bound) {
    std::ostringstream os;
    os << "LU residual " << residual << " exceeds " << bound;
    throw Error(os.str());
  }
  return x;
}

}  // namespace

Vector lu_solve(const LinearSystem& system) {
  if (system.rhs.size() != system.lhs.rows()) {
    throw ShapeError("right-hand side length does not match the matrix");
  }
  const auto lu = factorize(system.lhs);
  return checked_solve(lu, system.lhs, system.rhs);
}

Matrix numeric_inverse(const Matrix& mat) {
  const auto lu = factorize(mat);
  const Eigen::Index n = mat.rows();
  Matrix inverse(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    inverse.col(col) = checked_solve(lu, mat, Vector::Unit(n, col));
  }
  return inverse;
}

Vector branch_voltages(const PackConfig& config, const Vector& x, const Vector& currents,
                       OcvDomain domain) {
  const std::size_t n = config.cells.size();
  Vector v(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    v(i) = config.ocv.eval(x(2 * i), domain) + x(2 * i + 1) +
           config.cells[k].series_resistance * currents(i);
  }
  return v;
}

Vector oracle_branch_currents(const PackConfig& config, const Vector& x, double current,
                              OcvDomain domain) {
  const auto n = static_cast<Eigen::Index>(config.cells.size());
  if (x.size() != 2 * n) {
    throw ShapeError("state length must be twice the cell count");
  }
  // Unknowns i_1..i_n. Row k < n-1:  r_k i_k - r_{k+1} i_{k+1} = p_{k+1} - p_k
  // with p_k = OCV(z_k) + w_k. Last row: sum i_k = I.
  LinearSystem system{Matrix::Zero(n, n), Vector::Zero(n)};
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const auto& here = config.cells[static_cast<std::size_t>(k)];
    const auto& next = config.cells[static_cast<std::size_t>(k + 1)];
    const double p_here = config.ocv.eval(x(2 * k), domain) + x(2 * k + 1);
    const double p_next = config.ocv.eval(x(2 * k + 2), domain) + x(2 * k + 3);
    system.lhs(k, k) = here.series_resistance;
    system.lhs(k, k + 1) = -next.series_resistance;
    system.rhs(k) = p_next - p_here;
  }
  system.lhs.row(n - 1).setOnes();
  system.rhs(n - 1) = current;
  return lu_solve(system);
}

}  // namespace parapack::oracle
