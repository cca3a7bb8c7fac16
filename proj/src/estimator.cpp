#include "parapack/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "parapack/errors.hpp"

namespace parapack {

Matrix kappa_matrix(std::span<const KappaBlock> kappa) {
  const auto n = static_cast<Eigen::Index>(kappa.size());
  Matrix out = Matrix::Zero(2 * n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out(2 * k, k) = kappa[static_cast<std::size_t>(k)].k1;
    out(2 * k + 1, k) = kappa[static_cast<std::size_t>(k)].k2;
  }
  return out;
}

double quadratic_b(const KappaBlock& kappa, const CellParams& cell, double slope) {
  return kappa.k1 * slope + kappa.k2 - 1.0 / cell.rc_time_constant();
}

// k1 d (k2 - 1/RC - k2) with the k2 terms cancelled.
double quadratic_c(const KappaBlock& kappa, const CellParams& cell, double slope) {
  return -kappa.k1 * slope / cell.rc_time_constant();
}

StabilityMargin check_stability_prop1(const KappaBlock& kappa, const CellParams& cell,
                                      double lower, double upper) {
  if (!(lower > 0.0) || !(lower <= upper) || !std::isfinite(upper)) {
    throw ParameterError("invalid slope interval: need 0 < lower <= upper");
  }
  validate(cell);
  StabilityMargin m;
  m.b_at_lower = quadratic_b(kappa, cell, lower);
  m.b_at_upper = quadratic_b(kappa, cell, upper);
  m.c_at_lower = quadratic_c(kappa, cell, lower);
  m.c_at_upper = quadratic_c(kappa, cell, upper);
  m.worst_b = std::max(m.b_at_lower, m.b_at_upper);
  m.worst_c = std::min(m.c_at_lower, m.c_at_upper);
  m.stable = m.worst_b < -kRouthHurwitzMargin && m.worst_c > kRouthHurwitzMargin;
  return m;
}

namespace {

// Largest real part of the eigenvalues of [[a, b], [c, d]].
double max_real_eigenvalue(double a, double b, double c, double d) {
  const double trace = a + d;
  const double det = a * d - b * c;
  const double disc = trace * trace - 4.0 * det;
  if (disc < 0.0) {
    return 0.5 * trace;
  }
  const double root = std::sqrt(disc);
  const double big = 0.5 * (trace + std::copysign(root, trace));
  if (big == 0.0) {
    return 0.0;
  }
  return std::max(big, det / big);
}

}  // namespace

double eigencheck_prop1(const KappaBlock& kappa, const CellParams& cell,
                        std::span<const double> slopes) {
  const double decay = 1.0 / cell.rc_time_constant();
  double worst = -std::numeric_limits<double>::infinity();
  for (double slope : slopes) {
    worst = std::max(worst, max_real_eigenvalue(kappa.k1 * slope, kappa.k1, kappa.k2 * slope,
                                                kappa.k2 - decay));
  }
  return worst;
}

double eigencheck_prop1(const KappaBlock& kappa, const CellParams& cell, double lower,
                        double upper, std::size_t points) {
  std::vector<double> slopes(std::max<std::size_t>(points, 2));
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(slopes.size() - 1);
    slopes[i] = lower + frac * (upper - lower);
  }
  slopes.back() = upper;
  return eigencheck_prop1(kappa, cell, slopes);
}

ObserverGain design_gain_prop1(const PackModel& model, const KappaGain& kappa,
                               const SlopeBounds& bounds, const GainDesignOptions& options) {
  const std::size_t n = model.cell_count();
  if (kappa.size() != n) {
    throw ShapeError("need one kappa block per cell");
  }
  ObserverGain out;
  out.kappa = kappa;
  out.inverse = options.inverse;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& block = kappa[k];
    if (!std::isfinite(block.k1) || !std::isfinite(block.k2)) {
      throw ParameterError("kappa block for cell " + std::to_string(k + 1) + " is not finite");
    }
    const auto margin =
        check_stability_prop1(block, model.config().cells[k], bounds.lower, bounds.upper);
    if (!margin.stable && !options.force) {
      std::ostringstream os;
      os << "max b = " << margin.worst_b << ", min c = " << margin.worst_c;
      throw UnstableGainError(k, os.str());
    }
    out.margins.push_back(margin);
  }

  const Matrix& coupling = model.d_ocv();
  Eigen::JacobiSVD<Matrix> svd(coupling, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sigma = svd.singularValues();
  const double smax = sigma(0);
  const double smin = sigma(sigma.size() - 1);
  out.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();

  Matrix inverse;
  if (options.inverse == GainInverse::exact) {
    if (!(out.condition < options.max_condition)) {
      Eigen::Index rank = 0;
      for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > smax / options.max_condition) ++rank;
      }
      std::ostringstream os;
      os << "I + r Pi_v is singular (condition " << out.condition << ")";
      throw SingularMatrixError(os.str(), static_cast<std::size_t>(rank));
    }
    inverse = coupling.partialPivLu().inverse();
  } else {
    const double cutoff = 1e-9 * smax;
    Vector sigma_inv = Vector::Zero(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
      if (sigma(i) > cutoff) sigma_inv(i) = 1.0 / sigma(i);
    }
    inverse = svd.matrixV() * sigma_inv.asDiagonal() * svd.matrixU().transpose();
  }

  const Matrix kap = kappa_matrix(kappa);
  out.k_bar = -model.b_ocv() * inverse;
  out.k_tilde = kap * inverse;
  out.gain = out.k_bar + out.k_tilde;
  out.decoupling_residual = (model.b_ocv() + out.gain * coupling - kap).cwiseAbs().maxCoeff();
  return out;
}

Matrix lmi_matrix(const PackModel& model, const LmiCandidate& candidate, double lower,
                  double upper) {
  const auto n = static_cast<Eigen::Index>(model.cell_count());
  const Eigen::Index size = 2 * n;
  const Matrix& p = candidate.p;
  const Matrix& q = candidate.q;
  const Matrix& z = model.z_selector();
  const Matrix tau = candidate.tau.asDiagonal();

  const Matrix m11 = p * model.a() + q * model.c();
  const Matrix m12 = p * model.b_ocv() + q * model.d_ocv();

  Matrix s = Matrix::Zero(2 * size + n, 2 * size + n);
  s.block(0, 0, size, size) = m11 + m11.transpose() - lower * upper * z * tau * z.transpose();
  s.block(0, size, size, n) = m12 + 0.5 * (lower + upper) * z * tau;
  s.block(size, 0, n, size) = s.block(0, size, size, n).transpose();
  s.block(0, size + n, size, size) = p;
  s.block(size + n, 0, size, size) = p.transpose();
  s.block(size, size, n, n) = -tau;
  s.block(size + n, size + n, size, size) = -candidate.gamma * Matrix::Identity(size, size);
  return s;
}

LmiReport verify_lmi_prop2(const PackModel& model, const LmiCandidate& candidate, double lower,
                           double upper) {
  const auto n = static_cast<Eigen::Index>(model.cell_count());
  const Eigen::Index size = 2 * n;
  if (candidate.p.rows() != size || candidate.p.cols() != size) {
    throw ShapeError("P must be 2n x 2n");
  }
  if (candidate.q.rows() != size || candidate.q.cols() != n) {
    throw ShapeError("Q must be 2n x n");
  }
  if (candidate.tau.size() != n) {
    throw ShapeError("tau must have n diagonal entries");
  }
  if (!candidate.p.allFinite() || !candidate.q.allFinite() || !candidate.tau.allFinite() ||
      !std::isfinite(candidate.gamma)) {
    throw ShapeError("candidate has non-finite entries");
  }
  const double asymmetry =
      (candidate.p - candidate.p.transpose()).cwiseAbs().rowwise().sum().maxCoeff();
  if (!(asymmetry < 1e-12)) {
    throw ShapeError("P is not symmetric");
  }
  if (!(lower > 0.0) || !(lower <= upper)) {
    throw ParameterError("invalid slope interval: need 0 < lower <= upper");
  }

  LmiReport report;
  report.block_convention =
      "blocks (e: 2n, dOCV: n, d: 2n); Omega = [[-lo*hi Z tau Z^T, (lo+hi)/2 Z tau, 0], "
      "[(lo+hi)/2 tau Z^T, -tau, 0], [0, 0, 0]], Z is 2n x n with z = Z^T x";
  report.bound = "V(e(t)) <= V(e(0)) + gamma ||d||_2^2, V(e) = e^T P e, d = K 1 d_v + (B_I + K D_I) d_I";

  Eigen::SelfAdjointEigenSolver<Matrix> p_eig(candidate.p, Eigen::EigenvaluesOnly);
  report.p_min_eigenvalue = p_eig.eigenvalues()(0);

  const Matrix s = lmi_matrix(model, candidate, lower, upper);
  Eigen::SelfAdjointEigenSolver<Matrix> s_eig(s, Eigen::EigenvaluesOnly);
  report.lmi_max_eigenvalue = s_eig.eigenvalues()(s.rows() - 1);
  report.lmi_negative_definite = report.lmi_max_eigenvalue < -kLmiMargin;

  const Matrix shifted = -s - kLmiMargin * Matrix::Identity(s.rows(), s.cols());
  const bool cholesky_verdict = Eigen::LLT<Matrix>(shifted).info() == Eigen::Success;
  report.consistent = cholesky_verdict == report.lmi_negative_definite;

  if (!(report.p_min_eigenvalue > 0.0)) {
    report.reason = "P not positive definite";
  } else if ((candidate.tau.array() < 0.0).any()) {
    report.reason = "tau has negative entries";
  } else if (candidate.gamma < 0.0) {
    report.reason = "gamma is negative";
  } else if (!report.lmi_negative_definite) {
    report.reason = "M + M^T + Omega not negative definite";
  } else {
    report.accepted = true;
    report.reason = "certificate holds";
    report.implied_gain = candidate.p.llt().solve(candidate.q);
  }
  return report;
}

Vector error_disturbance(const PackModel& model, const Matrix& gain, double d_current,
                         double d_voltage) {
  const auto n = static_cast<Eigen::Index>(model.cell_count());
  return gain * Vector::Ones(n) * d_voltage + (model.b_i() + gain * model.d_i()) * d_current;
}

namespace {

void accumulate(SectorCheck& out, const OcvCurve& curve, const SlopeBounds& bounds, double z,
                double zh, double tolerance) {
  const double ratio = (curve.eval(z) - curve.eval(zh)) / (z - zh);
  out.min_ratio = std::min(out.min_ratio, ratio);
  out.max_ratio = std::max(out.max_ratio, ratio);
  if (out.ok && (ratio < bounds.lower - tolerance || ratio > bounds.upper + tolerance)) {
    out.ok = false;
    out.violation = std::make_pair(z, zh);
  }
}

SectorCheck empty_check() {
  SectorCheck out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  out.max_ratio = -std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

SectorCheck ocv_error_sector_check(const OcvCurve& curve, const SlopeBounds& bounds,
                                   std::size_t grid, double tolerance) {
  SectorCheck out = empty_check();
  const std::size_t points = std::max<std::size_t>(grid, 2);
  const double h = 1.0 / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    for (std::size_t j = i + 1; j < points; ++j) {
      const double z = std::min(1.0, static_cast<double>(j) * h);
      const double zh = static_cast<double>(i) * h;
      accumulate(out, curve, bounds, z, zh, tolerance);
    }
  }
  return out;
}

SectorCheck ocv_error_sector_check(const OcvCurve& curve) {
  return ocv_error_sector_check(curve, slope_bounds(curve));
}

SectorCheck ocv_error_sector_check(const OcvCurve& curve, const SlopeBounds& bounds,
                                   std::span<const std::pair<double, double>> pairs,
                                   double tolerance) {
  SectorCheck out = empty_check();
  for (const auto& [z, zh] : pairs) {
    if (z == zh) continue;
    accumulate(out, curve, bounds, z, zh, tolerance);
  }
  return out;
}

}  // namespace parapack
