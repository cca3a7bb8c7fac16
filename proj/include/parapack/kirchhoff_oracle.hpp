#pragma once

#include "parapack/linalg.hpp"
#include "parapack/ocv.hpp"
#include "parapack/pack_model.hpp"

// Brute-force dense solution of Kirchhoff's laws. Nothing here reuses the
// closed-form inverse or the matrices of PackModel.
namespace parapack::oracle {

struct LinearSystem {
  Matrix lhs;
  Vector rhs;
};

/// LU with partial pivoting. Throws SingularMatrixError when a pivot falls below
/// 1e-14 times the largest entry of lhs, and Error when the residual exceeds
/// 1e-10 ||rhs||_inf.
Vector lu_solve(const LinearSystem& system);

Matrix numeric_inverse(const Matrix& mat);

/// Assembles the n-1 voltage equalities between neighbouring branches and the
/// current balance sum i_k = I directly from the cell parameters, then solves.
Vector oracle_branch_currents(const PackConfig& config, const Vector& x, double current,
                              OcvDomain domain = OcvDomain::strict);

/// Branch voltages OCV(z_k) + w_k + r_k i_k for given currents.
Vector branch_voltages(const PackConfig& config, const Vector& x, const Vector& currents,
                       OcvDomain domain = OcvDomain::strict);

}  // namespace parapack::oracle
