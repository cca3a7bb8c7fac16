#include "parapack/pack_model.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "parapack/errors.hpp"
#include "parapack/kirchhoff_oracle.hpp"

namespace parapack {

namespace {

constexpr double kMinResistance = 1e-12;
constexpr double kInverseTolerance = 1e-10;
constexpr double kVoltageAgreement = 1e-9;
constexpr std::size_t kFullCheckLimit = 64;
constexpr std::size_t kSampledColumns = 10;

void check_resistances(std::span<const double> r) {
  if (r.size() < 2) {
    throw ParameterError("a parallel pack needs n >= 2 cells");
  }
  double conductance = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!(r[k] > 0.0) || !std::isfinite(r[k])) {
      throw ParameterError("series resistance of cell " + std::to_string(k + 1) +
                           " must be positive and finite");
    }
    if (r[k] < kMinResistance) {
      throw ParameterError("series resistance of cell " + std::to_string(k + 1) +
                           " is below 1e-12 ohm");
    }
    conductance += 1.0 / r[k];
  }
  if (!std::isfinite(conductance)) {
    throw ParameterError("total conductance overflows");
  }
}

std::string entry(const char* name, Eigen::Index i, Eigen::Index j, double value) {
  std::ostringstream os;
  os << name << "(" << i + 1 << "," << j + 1 << ") = " << value;
  return os.str();
}

}  // namespace

void validate(const CellParams& cell) {
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(cell.series_resistance)) throw ParameterError("series resistance must be > 0");
  if (!positive(cell.rc_resistance)) throw ParameterError("RC resistance must be > 0");
  if (!positive(cell.rc_capacitance)) throw ParameterError("RC capacitance must be > 0");
  if (!positive(cell.capacity)) throw ParameterError("capacity must be > 0");
}

void validate(const PackConfig& config) {
  if (config.cells.size() < 2) {
    throw ParameterError("a parallel pack needs n >= 2 cells");
  }
  for (const auto& cell : config.cells) {
    validate(cell);
  }
}

std::vector<double> series_resistances(const PackConfig& config) {
  std::vector<double> r;
  r.reserve(config.cells.size());
  for (const auto& cell : config.cells) {
    r.push_back(cell.series_resistance);
  }
  return r;
}

Matrix invert_a22(std::span<const double> r) {
  check_resistances(r);
  const auto n = static_cast<Eigen::Index>(r.size());

  // Conductance sums excluding one cell, built from prefix/suffix sums.
  std::vector<double> prefix(r.size() + 1, 0.0);
  std::vector<double> suffix(r.size() + 1, 0.0);
  for (std::size_t k = 0; k < r.size(); ++k) {
    prefix[k + 1] = prefix[k] + 1.0 / r[k];
    suffix[r.size() - 1 - k] = suffix[r.size() - k] + 1.0 / r[r.size() - 1 - k];
  }
  const double total = prefix[r.size()];
  const double harmonic = 1.0 / total;

  Matrix m(n, n);
  for (Eigen::Index row = 0; row < n; ++row) {
    const double r_row = r[static_cast<std::size_t>(row)];
    m(row, n - 1) = 1.0 / (r_row * total);
  }
  for (Eigen::Index col = 0; col + 1 < n; ++col) {
    const auto special = static_cast<std::size_t>(col + 1);
    const double r_next = r[special];
    for (Eigen::Index row = 0; row < n; ++row) {
      if (static_cast<std::size_t>(row) == special) {
        const double excluded = prefix[special] + suffix[special + 1];
        m(row, col) = -excluded / (r_next * total);
      } else {
        m(row, col) = harmonic / (r[static_cast<std::size_t>(row)] * r_next);
      }
    }
  }
  return m;
}

Matrix build_a22(std::span<const double> r) {
  check_resistances(r);
  const auto n = static_cast<Eigen::Index>(r.size());
  Matrix a22 = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    a22(k, 0) = r[0];
    a22(k, k + 1) = -r[static_cast<std::size_t>(k + 1)];
  }
  a22.row(n - 1).setOnes();
  return a22;
}

Vector PackModel::soc(const Vector& x) const {
  return z_.transpose() * x;
}

Vector PackModel::relaxation(const Vector& x) const {
  return w_ * x;
}

Vector PackModel::ocv_vector(const Vector& x, OcvDomain domain) const {
  const auto n = static_cast<Eigen::Index>(cell_count());
  Vector out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out(k) = config_.ocv.eval(x(2 * k), domain);
  }
  return out;
}

PackModel build_pack_model(PackConfig config) {
  validate(config);
  const auto r = series_resistances(config);
  const auto n = static_cast<Eigen::Index>(r.size());

  PackModel model(std::move(config));
  const auto& cells = model.config_.cells;

  model.a22_inverse_ = invert_a22(r);
  const Matrix& m = model.a22_inverse_;

  // Build-time verification against the explicit matrix and a numeric inverse.
  const Matrix a22 = build_a22(r);
  const Matrix product = a22 * m - Matrix::Identity(n, n);
  Eigen::Index bi = 0;
  Eigen::Index bj = 0;
  model.inverse_residual_ = product.cwiseAbs().maxCoeff(&bi, &bj);
  if (model.inverse_residual_ > kInverseTolerance) {
    throw ModelError("A22 * M deviates from identity at " +
                     entry("A22*M - I", bi, bj, product(bi, bj)));
  }

  const double scale = m.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> columns;
  if (r.size() <= kFullCheckLimit) {
    for (Eigen::Index j = 0; j < n; ++j) columns.push_back(j);
  } else {
    std::mt19937_64 rng(0x5eed);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    for (std::size_t s = 0; s < kSampledColumns; ++s) columns.push_back(pick(rng));
  }
  for (Eigen::Index j : columns) {
    const Vector reference = oracle::lu_solve({a22, Vector::Unit(n, j)});
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dev = std::abs(reference(i) - m(i, j));
      model.oracle_deviation_ = std::max(model.oracle_deviation_, dev);
      if (dev > 1e-9 * scale) {
        throw ModelError("analytic inverse disagrees with LU inverse at " + entry("M", i, j, m(i, j)));
      }
    }
  }

  // Branch current maps: i = M [p_2 - p_1, ..., p_n - p_1, I]^T.
  model.pi_v_ = Matrix::Zero(n, n);
  model.pi_v_.col(0) = -m.leftCols(n - 1).rowwise().sum();
  model.pi_v_.rightCols(n - 1) = m.leftCols(n - 1);
  model.pi_i_ = m.col(n - 1);

  const double pi_scale = model.pi_v_.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row_sum = model.pi_v_.row(i).sum();
    if (std::abs(row_sum) > 1e-9 * pi_scale) {
      throw ModelError("row " + std::to_string(i + 1) + " of Pi_v does not sum to zero: " +
                       std::to_string(row_sum));
    }
  }
  if (std::abs(model.pi_i_.sum() - 1.0) > 1e-12) {
    throw ModelError("Pi_I entries sum to " + std::to_string(model.pi_i_.sum()) + ", not 1");
  }

  model.a11_ = Matrix::Zero(2 * n, 2 * n);
  model.b_bar_ = Matrix::Zero(2 * n, n);
  model.w_ = Matrix::Zero(n, 2 * n);
  model.z_ = Matrix::Zero(2 * n, n);
  model.r_diag_ = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& cell = cells[static_cast<std::size_t>(k)];
    model.a11_(2 * k + 1, 2 * k + 1) = -1.0 / cell.rc_time_constant();
    model.b_bar_(2 * k, k) = 1.0 / cell.capacity;
    model.b_bar_(2 * k + 1, k) = 1.0 / cell.rc_capacitance;
    model.w_(k, 2 * k + 1) = 1.0;
    model.z_(2 * k, k) = 1.0;
    model.r_diag_(k, k) = cell.series_resistance;
  }

  model.b_ocv_ = model.b_bar_ * model.pi_v_;
  model.a_ = model.a11_ + model.b_ocv_ * model.w_;
  model.b_i_ = model.b_bar_ * model.pi_i_;
  model.d_ocv_ = Matrix::Identity(n, n) + model.r_diag_ * model.pi_v_;
  model.c_ = model.d_ocv_ * model.w_;
  model.d_i_ = model.r_diag_ * model.pi_i_;
  return model;
}

Vector branch_currents(const PackModel& model, const Vector& x, double current, OcvDomain domain) {
  // Pi_v has zero row sums, so only potential differences matter; removing the
  // common level first keeps equal potentials from leaking rounding currents.
  Vector potential = model.ocv_vector(x, domain) + model.relaxation(x);
  potential.array() -= potential(0);
  return model.pi_v() * potential + model.pi_i() * current;
}

Vector voltage_vector(const PackModel& model, const Vector& x, double current, OcvDomain domain) {
  // Equal to C x + D_ocv OCV(z) + D_I I, evaluated per branch as OCV + w + r i.
  const Vector potential = model.ocv_vector(x, domain) + model.relaxation(x);
  const Vector i = branch_currents(model, x, current, domain);
  return potential + model.r_diag().diagonal().cwiseProduct(i);
}

double terminal_voltage(const PackModel& model, const Vector& x, double current, OcvDomain domain) {
  const Vector v = voltage_vector(model, x, current, domain);
  const double spread = v.maxCoeff() - v.minCoeff();
  if (!(spread <= kVoltageAgreement)) {
    std::ostringstream os;
    os << "branch voltages disagree by " << spread << " V";
    throw ModelError(os.str());
  }
  return v(0);
}

Vector make_state(std::span<const double> soc, std::span<const double> relaxation) {
  if (soc.size() != relaxation.size()) {
    throw ShapeError("SOC and relaxation vectors differ in length");
  }
  Vector x(static_cast<Eigen::Index>(2 * soc.size()));
  for (std::size_t k = 0; k < soc.size(); ++k) {
    x(static_cast<Eigen::Index>(2 * k)) = soc[k];
    x(static_cast<Eigen::Index>(2 * k + 1)) = relaxation[k];
  }
  return x;
}

}  // namespace parapack
