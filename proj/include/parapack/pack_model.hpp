#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "parapack/linalg.hpp"
#include "parapack/ocv.hpp"

namespace parapack {

// Equivalent-circuit constants of one cell: series resistance r, RC pair (R, C)
// and capacity Q, all strictly positive.
struct CellParams {
  double series_resistance;
  double rc_resistance;
  double rc_capacitance;
  double capacity;

  double rc_time_constant() const noexcept { return rc_resistance * rc_capacitance; }
};

struct PackConfig {
  std::vector<CellParams> cells;
  OcvCurve ocv;
};

void validate(const CellParams& cell);
void validate(const PackConfig& config);

std::vector<double> series_resistances(const PackConfig& config);

/// Closed-form inverse of the Kirchhoff coupling matrix A22.
///
/// With S = sum 1/r_k the entries are
///   m(j, n)     = 1 / (r_j S)
///   m(l, j)     = 1 / (r_l r_{j+1} S)          l != j+1, j < n
///   m(j+1, j)   = 1 / (r_{j+1}^2 S) - 1/r_{j+1}
/// (one-based). The subdiagonal family is evaluated as
/// -(S - 1/r_{j+1}) / (r_{j+1} S) which is the same value without the
/// cancellation that hits small r_{j+1}.
Matrix invert_a22(std::span<const double> resistances);

/// The explicit coupling matrix: row k < n is r_1 e_1 - r_{k+1} e_{k+1}, last row all ones.
Matrix build_a22(std::span<const double> resistances);

/// State-space pack model. State is interleaved [z1, w1, ..., zn, wn].
///
///   i     = Pi_v (OCV(z) + w) + Pi_I I
///   x'    = A x + B_ocv OCV(z) + B_I I
///   v_vec = C x + D_ocv OCV(z) + D_I I      (n identical entries)
///
/// Positive I charges the cells and the branch currents sum to I.
class PackModel {
 public:
  std::size_t cell_count() const noexcept { return config_.cells.size(); }
  std::size_t state_size() const noexcept { return 2 * cell_count(); }
  const PackConfig& config() const noexcept { return config_; }
  const OcvCurve& ocv() const noexcept { return config_.ocv; }

  const Matrix& a22_inverse() const noexcept { return a22_inverse_; }
  const Matrix& pi_v() const noexcept { return pi_v_; }
  const Vector& pi_i() const noexcept { return pi_i_; }
  const Matrix& a11() const noexcept { return a11_; }
  const Matrix& b_bar() const noexcept { return b_bar_; }
  const Matrix& a() const noexcept { return a_; }
  const Matrix& b_ocv() const noexcept { return b_ocv_; }
  const Vector& b_i() const noexcept { return b_i_; }
  const Matrix& c() const noexcept { return c_; }
  const Matrix& d_ocv() const noexcept { return d_ocv_; }
  const Vector& d_i() const noexcept { return d_i_; }
  const Matrix& w_selector() const noexcept { return w_; }  // n x 2n, w = W x
  const Matrix& z_selector() const noexcept { return z_; }  // 2n x n, z = Z^T x
  const Matrix& r_diag() const noexcept { return r_diag_; }

  // Largest |A22 M - I| entry and largest |M - M_lu| entry seen at build.
  double inverse_residual() const noexcept { return inverse_residual_; }
  double oracle_deviation() const noexcept { return oracle_deviation_; }

  Vector soc(const Vector& x) const;
  Vector relaxation(const Vector& x) const;
  Vector ocv_vector(const Vector& x, OcvDomain domain = OcvDomain::strict) const;

 private:
  friend PackModel build_pack_model(PackConfig config);
  explicit PackModel(PackConfig config) : config_(std::move(config)) {}

  PackConfig config_;
  Matrix a22_inverse_;
  Matrix pi_v_;
  Vector pi_i_;
  Matrix a11_;
  Matrix b_bar_;
  Matrix a_;
  Matrix b_ocv_;
  Vector b_i_;
  Matrix c_;
  Matrix d_ocv_;
  Vector d_i_;
  Matrix w_;
  Matrix z_;
  Matrix r_diag_;
  double inverse_residual_ = 0.0;
  double oracle_deviation_ = 0.0;
};

/// Assembles every matrix and runs the build-time checks (A22 M = I, agreement
/// with an LU inverse, zero row sums of Pi_v, Pi_I summing to one). Throws
/// ModelError naming the offending entry.
PackModel build_pack_model(PackConfig config);

Vector branch_currents(const PackModel& model, const Vector& x, double current,
                       OcvDomain domain = OcvDomain::strict);

/// The voltage vector C x + D_ocv OCV(z) + D_I I.
Vector voltage_vector(const PackModel& model, const Vector& x, double current,
                      OcvDomain domain = OcvDomain::strict);

/// Pack terminal voltage; throws ModelError if the n entries of the voltage
/// vector disagree by more than 1e-9.
double terminal_voltage(const PackModel& model, const Vector& x, double current,
                        OcvDomain domain = OcvDomain::strict);

/// Interleaves per-cell SOC and relaxation voltage into a state vector.
Vector make_state(std::span<const double> soc, std::span<const double> relaxation);

}  // namespace parapack
