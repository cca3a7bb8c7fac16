#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "parapack/linalg.hpp"
#include "parapack/pack_model.hpp"
#include "parapack/signal.hpp"

namespace parapack {

struct SimulationOptions {
  double t_end = 0.0;
  double dt = 0.002;
  // The plant is evaluated slightly outside [0,1] inside the guard band.
  OcvDomain plant_domain = OcvDomain::extrapolate;
  OcvDomain observer_domain = OcvDomain::clamp;
  double soc_guard = 0.01;
};

enum class Termination { completed, soc_escape };

struct EstimatorSeries {
  std::vector<Vector> estimates;
  std::vector<Vector> errors;  // x - x_hat
  std::vector<double> error_norm;  // infinity norm of errors
  std::vector<double> estimated_voltage;
  std::vector<double> voltage_error;  // v - v_hat, both without sensor noise
  std::vector<double> current_disturbance;
  std::vector<double> voltage_disturbance;
};

struct SimulationTrace {
  std::size_t cells = 0;
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> currents;
  std::vector<double> voltage;
  std::vector<double> pack_current;  // current actually applied to the plant
  std::optional<EstimatorSeries> estimator;

  Termination termination = Termination::completed;
  std::size_t escape_step = 0;
  std::size_t escape_cell = 0;
  bool escape_in_estimate = false;

  std::size_t size() const noexcept { return times.size(); }
};

/// A x + B_ocv OCV(z) + B_I I.
Vector rhs(const PackModel& model, const Vector& x, double current,
           OcvDomain domain = OcvDomain::strict);

/// Fixed-step classical RK4 over [0, t_end], recording every step. Stops early
/// (Termination::soc_escape) when an SOC leaves [-guard, 1 + guard]; throws
/// DivergenceError on a non-finite state.
SimulationTrace integrate(const PackModel& model, const Vector& x0, const CurrentProfile& profile,
                          const SimulationOptions& options);

/// Plant with disturbed current/voltage co-integrated with the observer
///   x_hat' = A x_hat + B_ocv OCV(z_hat) + B_I I - K (v_meas - v_hat).
/// The observer sees the commanded current and the disturbed measured voltage.
SimulationTrace integrate_with_observer(const PackModel& model, const Matrix& gain,
                                       const Vector& x0, const Vector& x_hat0,
                                       const CurrentProfile& profile, const Disturbance& disturbance,
                                       const SimulationOptions& options);

struct DecoupledErrorTrace {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> errors;
};

/// Integrates the undisturbed plant together with the per-cell error system
///   e' = (A11 + kappa W) e + kappa (OCV(z) - OCV(z - e_z)).
DecoupledErrorTrace integrate_decoupled_error(const PackModel& model, const Matrix& kappa,
                                              const Vector& x0, const Vector& e0,
                                              const CurrentProfile& profile,
                                              const SimulationOptions& options);

struct ConvergenceEstimate {
  double error_coarse = 0.0;  // ||x_dt(T) - x_ref(T)||_inf
  double error_fine = 0.0;    // ||x_{dt/2}(T) - x_ref(T)||_inf
  double ratio = 0.0;         // about 16 for a fourth-order method
};

/// Global-error ratio of runs at dt and dt/2 against a dt/8 reference.
ConvergenceEstimate estimate_convergence(const PackModel& model, const Vector& x0,
                                         const CurrentProfile& profile,
                                         const SimulationOptions& options);

}  // namespace parapack
