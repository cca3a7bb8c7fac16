#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "parapack/linalg.hpp"
#include "parapack/ocv.hpp"
#include "parapack/pack_model.hpp"

namespace parapack {

// Per-cell observer gain block (kappa1, kappa2).
struct KappaBlock {
  double k1 = 0.0;
  double k2 = 0.0;
};

using KappaGain = std::vector<KappaBlock>;

/// Block-diagonal 2n x n matrix holding one kappa block per cell.
Matrix kappa_matrix(std::span<const KappaBlock> kappa);

// Coefficients of p(s) = s^2 - b s + c, the characteristic polynomial of the
// per-cell error matrix [[k1 d, k1], [k2 d, k2 - 1/RC]].
double quadratic_b(const KappaBlock& kappa, const CellParams& cell, double slope);
double quadratic_c(const KappaBlock& kappa, const CellParams& cell, double slope);

struct StabilityMargin {
  bool stable = false;
  double b_at_lower = 0.0;
  double b_at_upper = 0.0;
  double c_at_lower = 0.0;
  double c_at_upper = 0.0;
  double worst_b = 0.0;  // max of b over the interval, must be < -eps
  double worst_c = 0.0;  // min of c over the interval, must be > eps
};

inline constexpr double kRouthHurwitzMargin = 1e-12;

/// Routh-Hurwitz test over the slope interval. b and c are affine in the slope,
/// so checking the two endpoints is exact. Throws ParameterError when
/// lower <= 0 or lower > upper.
StabilityMargin check_stability_prop1(const KappaBlock& kappa, const CellParams& cell,
                                      double lower, double upper);

/// Max real eigenvalue part of the per-cell error matrix over the given slopes.
double eigencheck_prop1(const KappaBlock& kappa, const CellParams& cell,
                        std::span<const double> slopes);

/// Same, on `points` uniformly spaced slopes in [lower, upper].
double eigencheck_prop1(const KappaBlock& kappa, const CellParams& cell, double lower,
                        double upper, std::size_t points = 100);

enum class GainInverse {
  exact,   // (I + r Pi_v)^{-1}; fails when that matrix is singular
  pseudo,  // Moore-Penrose pseudo-inverse, least-squares decoupling
};

struct GainDesignOptions {
  GainInverse inverse = GainInverse::exact;
  bool force = false;  // accept kappa blocks that fail the stability test
  double max_condition = 1e12;
};

struct ObserverGain {
  Matrix gain;     // K = K_bar + K_tilde
  Matrix k_bar;    // -B_bar Pi_v (I + r Pi_v)^{-1}
  Matrix k_tilde;  // kappa (I + r Pi_v)^{-1}
  KappaGain kappa;
  GainInverse inverse = GainInverse::exact;
  double condition = 0.0;  // of I + r Pi_v
  // max |B_bar Pi_v + K (I + r Pi_v) - kappa|; zero when the error dynamics decouple.
  double decoupling_residual = 0.0;
  std::vector<StabilityMargin> margins;
};

/// Builds the decoupling observer gain. Every kappa block must pass
/// check_stability_prop1 against the OCV slope bounds unless options.force.
/// Throws UnstableGainError naming the cell, or SingularMatrixError when the
/// exact inverse is requested and the condition number exceeds max_condition.
ObserverGain design_gain_prop1(const PackModel& model, const KappaGain& kappa,
                               const SlopeBounds& bounds, const GainDesignOptions& options = {});

/// Decision variables of the dissipation certificate.
struct LmiCandidate {
  Matrix p;       // 2n x 2n, symmetric
  Matrix q;       // 2n x n
  double gamma = 0.0;
  Vector tau;     // diagonal of the n x n multiplier
};

struct LmiReport {
  bool accepted = false;
  std::string reason;
  double p_min_eigenvalue = 0.0;
  double lmi_max_eigenvalue = 0.0;
  bool lmi_negative_definite = false;
  // Cholesky-based rerun of the definiteness test; agrees with the eigenvalue verdict.
  bool consistent = false;
  std::optional<Matrix> implied_gain;  // P^{-1} Q when accepted
  std::string block_convention;
  std::string bound;
};

inline constexpr double kLmiMargin = 1e-10;

/// The symmetric matrix M + M^T + Omega over (e, dOCV, d) blocks of sizes
/// (2n, n, 2n), with the sector multiplier tau applied to every sector term.
Matrix lmi_matrix(const PackModel& model, const LmiCandidate& candidate, double lower,
                  double upper);

/// Checks P > 0, tau >= 0, gamma >= 0 and max eig(M + M^T + Omega) < -1e-10.
/// Throws ShapeError on mismatched shapes or an asymmetric P.
LmiReport verify_lmi_prop2(const PackModel& model, const LmiCandidate& candidate, double lower,
                           double upper);

/// Disturbance as it enters the error dynamics: K 1 d_v + (B_I + K D_I) d_I.
Vector error_disturbance(const PackModel& model, const Matrix& gain, double d_current,
                         double d_voltage);

struct SectorCheck {
  bool ok = true;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::optional<std::pair<double, double>> violation;
};

/// Checks lower - tol <= (OCV(z) - OCV(zh)) / (z - zh) <= upper + tol for all
/// pairs of distinct points on a uniform grid of [0,1].
SectorCheck ocv_error_sector_check(const OcvCurve& curve, const SlopeBounds& bounds,
                                   std::size_t grid = 201, double tolerance = 1e-9);

/// Uses the curve's own certified slope bounds.
SectorCheck ocv_error_sector_check(const OcvCurve& curve);

/// Same over explicit pairs; pairs with z == zh are skipped.
SectorCheck ocv_error_sector_check(const OcvCurve& curve, const SlopeBounds& bounds,
                                   std::span<const std::pair<double, double>> pairs,
                                   double tolerance = 1e-9);

}  // namespace parapack
