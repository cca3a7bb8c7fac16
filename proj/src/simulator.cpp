#include "parapack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parapack/errors.hpp"

namespace parapack {

namespace {

void check_options(const SimulationOptions& options) {
  if (!(options.dt > 0.0) || !std::isfinite(options.dt)) {
    throw ParameterError("dt must be positive");
  }
  if (!(options.t_end >= options.dt)) {
    throw ParameterError("t_end must be at least dt");
  }
}

std::size_t step_count(const SimulationOptions& options) {
  return static_cast<std::size_t>(std::ceil(options.t_end / options.dt - 1e-9));
}

double time_at(const SimulationOptions& options, std::size_t step) {
  return std::min(options.t_end, static_cast<double>(step) * options.dt);
}

template <typename F>
Vector rk4_step(const F& f, double t, const Vector& y, double h) {
  const Vector k1 = f(t, y);
  const Vector k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
  const Vector k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
  const Vector k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Index of the first SOC outside the guard band, or -1.
Eigen::Index soc_escape(const Vector& x, Eigen::Index offset, Eigen::Index cells, double guard) {
  for (Eigen::Index k = 0; k < cells; ++k) {
    const double z = x(offset + 2 * k);
    if (z < -guard || z > 1.0 + guard) return k;
  }
  return -1;
}

void check_initial(const PackModel& model, const Vector& x0) {
  if (x0.size() != static_cast<Eigen::Index>(model.state_size())) {
    throw ShapeError("initial state must have length 2n");
  }
  if (!x0.allFinite()) {
    throw ParameterError("initial state is not finite");
  }
}

}  // namespace

Vector rhs(const PackModel& model, const Vector& x, double current, OcvDomain domain) {
  // A x + B_ocv OCV(z) + B_I I, grouped as A11 x + B_bar i(x).
  return model.a11() * x + model.b_bar() * branch_currents(model, x, current, domain);
}

SimulationTrace integrate(const PackModel& model, const Vector& x0, const CurrentProfile& profile,
                          const SimulationOptions& options) {
  check_options(options);
  check_initial(model, x0);
  const auto n = static_cast<Eigen::Index>(model.cell_count());
  const OcvDomain domain = options.plant_domain;
  const auto applied = [&profile](double t) { return profile(t); };
  const auto field = [&](double t, const Vector& x) { return rhs(model, x, applied(t), domain); };

  SimulationTrace trace;
  trace.cells = model.cell_count();
  const std::size_t steps = step_count(options);
  trace.times.reserve(steps + 1);
  trace.states.reserve(steps + 1);

  const auto record = [&](std::size_t step, double t, const Vector& x) {
    const double current = applied(t);
    if (!std::isfinite(current)) {
      throw DivergenceError(step);
    }
    trace.times.push_back(t);
    trace.states.push_back(x);
    trace.currents.push_back(branch_currents(model, x, current, domain));
    trace.voltage.push_back(terminal_voltage(model, x, current, domain));
    trace.pack_current.push_back(current);
  };

  Vector x = x0;
  record(0, 0.0, x);
  for (std::size_t step = 1; step <= steps; ++step) {
    const double t0 = time_at(options, step - 1);
    const double t1 = time_at(options, step);
    x = rk4_step(field, t0, x, t1 - t0);
    if (!x.allFinite()) {
      throw DivergenceError(step);
    }
    record(step, t1, x);
    if (const auto cell = soc_escape(x, 0, n, options.soc_guard); cell >= 0) {
      trace.termination = Termination::soc_escape;
      trace.escape_step = step;
      trace.escape_cell = static_cast<std::size_t>(cell);
      break;
    }
  }
  return trace;
}

SimulationTrace integrate_with_observer(const PackModel& model, const Matrix& gain,
                                       const Vector& x0, const Vector& x_hat0,
                                       const CurrentProfile& profile, const Disturbance& disturbance,
                                       const SimulationOptions& options) {
  check_options(options);
  check_initial(model, x0);
  check_initial(model, x_hat0);
  const auto n = static_cast<Eigen::Index>(model.cell_count());
  const Eigen::Index size = 2 * n;
  if (gain.rows() != size || gain.cols() != n) {
    throw ShapeError("observer gain must be 2n x n");
  }
  if (!gain.allFinite()) {
    throw ParameterError("observer gain is not finite");
  }
  const OcvDomain plant_domain = options.plant_domain;
  const OcvDomain observer_domain = options.observer_domain;
  const Vector ones = Vector::Ones(n);

  struct Inputs {
    double current;
    double d_current;
    double d_voltage;
  };
  const auto inputs = [&](double t) {
    const double current = profile(t);
    return Inputs{current, disturbance.current(t, current), disturbance.voltage(t, current)};
  };

  const auto field = [&](double t, const Vector& y) {
    const Inputs u = inputs(t);
    const Vector x = y.head(size);
    const Vector x_hat = y.tail(size);
    const double plant_current = u.current + u.d_current;
    const Vector measured =
        voltage_vector(model, x, plant_current, plant_domain) + u.d_voltage * ones;
    const Vector predicted = voltage_vector(model, x_hat, u.current, observer_domain);
    Vector dy(2 * size);
    dy.head(size) = rhs(model, x, plant_current, plant_domain);
    dy.tail(size) = rhs(model, x_hat, u.current, observer_domain) - gain * (measured - predicted);
    return dy;
  };

  SimulationTrace trace;
  trace.cells = model.cell_count();
  trace.estimator.emplace();
  auto& est = *trace.estimator;

  const auto record = [&](std::size_t step, double t, const Vector& y) {
    const Inputs u = inputs(t);
    if (!std::isfinite(u.current) || !std::isfinite(u.d_current) || !std::isfinite(u.d_voltage)) {
      throw DivergenceError(step);
    }
    const Vector x = y.head(size);
    const Vector x_hat = y.tail(size);
    const double plant_current = u.current + u.d_current;
    const double v = terminal_voltage(model, x, plant_current, plant_domain);
    const double v_hat = terminal_voltage(model, x_hat, u.current, observer_domain);
    trace.times.push_back(t);
    trace.states.push_back(x);
    trace.currents.push_back(branch_currents(model, x, plant_current, plant_domain));
    trace.voltage.push_back(v);
    trace.pack_current.push_back(plant_current);
    est.estimates.push_back(x_hat);
    est.errors.push_back(x - x_hat);
    est.error_norm.push_back((x - x_hat).cwiseAbs().maxCoeff());
    est.estimated_voltage.push_back(v_hat);
    est.voltage_error.push_back(v - v_hat);
    est.current_disturbance.push_back(u.d_current);
    est.voltage_disturbance.push_back(u.d_voltage);
  };

  Vector y(2 * size);
  y << x0, x_hat0;
  record(0, 0.0, y);
  const std::size_t steps = step_count(options);
  for (std::size_t step = 1; step <= steps; ++step) {
    const double t0 = time_at(options, step - 1);
    const double t1 = time_at(options, step);
    y = rk4_step(field, t0, y, t1 - t0);
    if (!y.allFinite()) {
      throw DivergenceError(step);
    }
    record(step, t1, y);
    auto cell = soc_escape(y, 0, n, options.soc_guard);
    bool in_estimate = false;
    if (cell < 0) {
      cell = soc_escape(y, size, n, options.soc_guard);
      in_estimate = cell >= 0;
    }
    if (cell >= 0) {
      trace.termination = Termination::soc_escape;
      trace.escape_step = step;
      trace.escape_cell = static_cast<std::size_t>(cell);
      trace.escape_in_estimate = in_estimate;
      break;
    }
  }
  return trace;
}

DecoupledErrorTrace integrate_decoupled_error(const PackModel& model, const Matrix& kappa,
                                              const Vector& x0, const Vector& e0,
                                              const CurrentProfile& profile,
                                              const SimulationOptions& options) {
  check_options(options);
  check_initial(model, x0);
  const auto n = static_cast<Eigen::Index>(model.cell_count());
  const Eigen::Index size = 2 * n;
  if (e0.size() != size) {
    throw ShapeError("initial error must have length 2n");
  }
  if (kappa.rows() != size || kappa.cols() != n) {
    throw ShapeError("kappa must be 2n x n");
  }
  const Matrix error_matrix = model.a11() + kappa * model.w_selector();
  const OcvDomain plant_domain = options.plant_domain;
  const OcvDomain observer_domain = options.observer_domain;
  const auto& ocv = model.ocv();

  const auto field = [&](double t, const Vector& y) {
    const Vector x = y.head(size);
    const Vector e = y.tail(size);
    Vector delta_ocv(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double z = x(2 * k);
      delta_ocv(k) = ocv.eval(z, plant_domain) - ocv.eval(z - e(2 * k), observer_domain);
    }
    Vector dy(2 * size);
    dy.head(size) = rhs(model, x, profile(t), plant_domain);
    dy.tail(size) = error_matrix * e + kappa * delta_ocv;
    return dy;
  };

  DecoupledErrorTrace trace;
  Vector y(2 * size);
  y << x0, e0;
  trace.times.push_back(0.0);
  trace.states.push_back(x0);
  trace.errors.push_back(e0);
  const std::size_t steps = step_count(options);
  for (std::size_t step = 1; step <= steps; ++step) {
    const double t0 = time_at(options, step - 1);
    const double t1 = time_at(options, step);
    y = rk4_step(field, t0, y, t1 - t0);
    if (!y.allFinite()) {
      throw DivergenceError(step);
    }
    trace.times.push_back(t1);
    trace.states.push_back(y.head(size));
    trace.errors.push_back(y.tail(size));
  }
  return trace;
}

ConvergenceEstimate estimate_convergence(const PackModel& model, const Vector& x0,
                                         const CurrentProfile& profile,
                                         const SimulationOptions& options) {
  const auto final_state = [&](double dt) {
    SimulationOptions o = options;
    o.dt = dt;
    const auto trace = integrate(model, x0, profile, o);
    if (trace.termination != Termination::completed) {
      throw Error("convergence run left the SOC guard band");
    }
    return trace.states.back();
  };
  const Vector coarse = final_state(options.dt);
  const Vector fine = final_state(options.dt / 2.0);
  const Vector reference = final_state(options.dt / 8.0);
  ConvergenceEstimate out;
  out.error_coarse = (coarse - reference).cwiseAbs().maxCoeff();
  out.error_fine = (fine - reference).cwiseAbs().maxCoeff();
  out.ratio = out.error_fine > 0.0 ? out.error_coarse / out.error_fine : 0.0;
  return out;
}

}  // namespace parapack
