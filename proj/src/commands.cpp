#include "parapack/commands.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include <spdlog/spdlog.h>

#include "parapack/errors.hpp"
#include "parapack/estimator.hpp"
#include "parapack/kirchhoff_oracle.hpp"
#include "parapack/run_config.hpp"
#include "parapack/simulator.hpp"
#include "parapack/trace_io.hpp"

namespace parapack::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

json check(const std::string& name, double value, double tolerance) {
  return json{{"name", name}, {"value", value}, {"tolerance", tolerance}, {"pass", value <= tolerance}};
}

fs::path output_dir(const CommandOptions& options, const RunConfig& config) {
  fs::path dir = options.out_dir ? fs::path(*options.out_dir) : fs::path(config.output.directory);
  fs::create_directories(dir);
  return dir;
}

void write_report(const fs::path& path, const json& report) {
  std::ofstream file(path);
  if (!file) throw Error("cannot write " + path.string());
  file << report.dump(2) << '\n';
}

void write_trace(const fs::path& path, const SimulationTrace& trace, std::size_t stride) {
  std::ofstream file(path);
  if (!file) throw Error("cannot write " + path.string());
  write_trace_csv(file, trace, stride);
}

Vector initial_state(const RunConfig& config) {
  return make_state(config.sim.initial_soc, config.sim.initial_relaxation);
}

SimulationOptions sim_options(const RunConfig& config) {
  SimulationOptions o;
  o.t_end = config.sim.t_end;
  o.dt = config.sim.dt;
  return o;
}

json slope_json(const SlopeBounds& b) {
  return json{{"lower", b.lower}, {"upper", b.upper}, {"argmin", b.argmin}, {"argmax", b.argmax}};
}

json termination_json(const SimulationTrace& trace) {
  json out{{"completed", trace.termination == Termination::completed}};
  if (trace.termination == Termination::soc_escape) {
    out["reason"] = trace.escape_in_estimate ? "estimated SOC left the guard band"
                                             : "SOC left the guard band";
    out["step"] = trace.escape_step;
    out["cell"] = trace.escape_cell + 1;
  }
  return out;
}

// Trapezoid integral of the applied current over the trace grid.
double delivered_charge(const SimulationTrace& trace) {
  double q = 0.0;
  for (std::size_t s = 1; s < trace.size(); ++s) {
    q += 0.5 * (trace.times[s] - trace.times[s - 1]) * (trace.pack_current[s] + trace.pack_current[s - 1]);
  }
  return q;
}

}  // namespace

json run_oracle_suite(const PackModel& model, std::size_t samples, std::uint64_t seed) {
  const auto r = series_resistances(model.config());
  const auto n = static_cast<Eigen::Index>(model.cell_count());
  const Matrix a22 = build_a22(r);
  const Matrix& m = model.a22_inverse();

  const double residual = (a22 * m - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  const Matrix lu_inverse = oracle::numeric_inverse(a22);
  const double inverse_gap = (lu_inverse - m).cwiseAbs().maxCoeff() / m.cwiseAbs().maxCoeff();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> soc(0.0, 1.0);
  std::uniform_real_distribution<double> relax(-0.05, 0.05);
  std::uniform_real_distribution<double> amps(-2.0, 2.0);
  double current_gap = 0.0;
  double balance_gap = 0.0;
  double voltage_spread = 0.0;
  double terminal_gap = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Vector x(2 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
      x(2 * k) = soc(rng);
      x(2 * k + 1) = relax(rng);
    }
    const double current = amps(rng);
    const Vector analytic = branch_currents(model, x, current);
    const Vector reference = oracle::oracle_branch_currents(model.config(), x, current);
    current_gap = std::max(current_gap, (analytic - reference).cwiseAbs().maxCoeff());
    balance_gap = std::max(balance_gap, std::abs(analytic.sum() - current));
    const Vector v = oracle::branch_voltages(model.config(), x, analytic);
    voltage_spread = std::max(voltage_spread, v.maxCoeff() - v.minCoeff());
    const Vector v_ref = oracle::branch_voltages(model.config(), x, reference);
    const Vector v_model = voltage_vector(model, x, current);
    terminal_gap = std::max(terminal_gap, (v_model - v_ref).cwiseAbs().maxCoeff());
  }

  json checks = json::array();
  checks.push_back(check("inverse_residual", residual, 1e-10));
  checks.push_back(check("analytic_vs_lu_inverse", inverse_gap, 1e-9));
  checks.push_back(check("branch_currents_vs_oracle", current_gap, 1e-10));
  checks.push_back(check("current_balance", balance_gap, 1e-10));
  checks.push_back(check("branch_voltage_agreement", voltage_spread, 1e-9));
  checks.push_back(check("terminal_voltage_vs_oracle", terminal_gap, 1e-9));
  bool pass = true;
  for (const auto& c : checks) pass = pass && c["pass"].get<bool>();
  return json{{"samples", samples}, {"seed", seed}, {"checks", checks}, {"pass", pass}};
}

int cmd_verify(const CommandOptions& options, std::ostream& out) {
  const RunConfig config = load_run_config(options.config_path);
  const PackModel model = build_pack_model(config.pack);
  spdlog::info("verifying pack model with {} cells", model.cell_count());

  json report = run_oracle_suite(model);
  report["schema_version"] = kSchemaVersion;
  report["command"] = "verify";
  report["cells"] = model.cell_count();
  bool pass = report["pass"].get<bool>();
  try {
    const SlopeBounds bounds = slope_bounds(model.ocv());
    const SectorCheck sector = ocv_error_sector_check(model.ocv(), bounds);
    report["slope_bounds"] = slope_json(bounds);
    report["ocv_sector"] = json{{"pass", sector.ok}, {"min_ratio", sector.min_ratio},
                                {"max_ratio", sector.max_ratio}};
    pass = pass && sector.ok;
  } catch (const MonotonicityError& e) {
    report["slope_bounds"] = json{{"error", e.what()}};
    pass = false;
  }
  report["pass"] = pass;

  write_report(output_dir(options, config) / config.output.report, report);
  out << report.dump(2) << '\n';
  return pass ? kExitPass : kExitDomainFailure;
}

int cmd_simulate(const CommandOptions& options, std::ostream& out) {
  const RunConfig config = load_run_config(options.config_path);
  const PackModel model = build_pack_model(config.pack);
  const Vector x0 = initial_state(config);
  const SimulationOptions sim = sim_options(config);
  spdlog::info("simulating {} steps of {} {}", static_cast<long long>(sim.t_end / sim.dt), sim.dt,
               to_string(config.sim.time_unit));

  const SimulationTrace trace = integrate(model, x0, config.sim.profile, sim);
  const fs::path dir = output_dir(options, config);
  write_trace(dir / config.output.trace, trace, config.output.stride);

  const Vector& x_end = trace.states.back();
  double stored = 0.0;
  double imbalance = 0.0;
  for (std::size_t k = 0; k < model.cell_count(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    stored += model.config().cells[k].capacity * (x_end(2 * i) - x0(2 * i));
  }
  for (std::size_t s = 0; s < trace.size(); ++s) {
    imbalance = std::max(imbalance, std::abs(trace.currents[s].sum() - trace.pack_current[s]));
  }
  const double delivered = delivered_charge(trace);
  const double residual = std::abs(stored - delivered);

  json report{{"schema_version", kSchemaVersion},
              {"command", "simulate"},
              {"time_unit", to_string(config.sim.time_unit)},
              {"steps", trace.size() - 1},
              {"t_final", trace.times.back()},
              {"termination", termination_json(trace)},
              {"final_soc", to_json(model.soc(x_end))},
              {"final_relaxation", to_json(model.relaxation(x_end))},
              {"final_currents", to_json(trace.currents.back())},
              {"final_voltage", trace.voltage.back()},
              {"max_current_imbalance", imbalance},
              {"charge",
               {{"delivered", delivered},
                {"stored", stored},
                {"residual", residual},
                {"relative_residual", delivered != 0.0 ? residual / std::abs(delivered) : residual}}}};
  if (config.sim.convergence_check && trace.termination == Termination::completed) {
    const auto conv = estimate_convergence(model, x0, config.sim.profile, sim);
    report["convergence"] = json{{"dt", sim.dt},
                                 {"error_dt", conv.error_coarse},
                                 {"error_dt_half", conv.error_fine},
                                 {"richardson_ratio", conv.ratio}};
  }
  write_report(dir / config.output.report, report);
  out << report.dump(2) << '\n';
  if (trace.termination != Termination::completed) {
    spdlog::error("SOC left the guard band at step {}", trace.escape_step);
    return kExitDomainFailure;
  }
  return kExitPass;
}

int cmd_estimate(const CommandOptions& options, std::ostream& out) {
  const RunConfig config = load_run_config(options.config_path);
  if (!config.estimator) {
    throw ConfigError("estimator", "the estimate command needs an estimator block");
  }
  const EstimatorConfig& est = *config.estimator;
  const PackModel model = build_pack_model(config.pack);
  const SlopeBounds bounds = slope_bounds(model.ocv());

  GainDesignOptions design;
  design.inverse = est.gain_inverse;
  design.force = options.force_gain;
  const ObserverGain gain = design_gain_prop1(model, est.kappa, bounds, design);
  if (gain.decoupling_residual > 1e-9) {
    spdlog::warn("observer gain does not decouple the error dynamics (residual {})",
                 gain.decoupling_residual);
  }

  const Vector x0 = initial_state(config);
  std::vector<double> soc_hat = config.sim.initial_soc;
  for (double& z : soc_hat) z += est.soc_offset;
  const Vector x_hat0 = make_state(soc_hat, est.relaxation_estimate);

  const SimulationTrace trace = integrate_with_observer(model, gain.gain, x0, x_hat0,
                                                        config.sim.profile, est.disturbance,
                                                        sim_options(config));
  const fs::path dir = output_dir(options, config);
  write_trace(dir / config.output.trace, trace, config.output.stride);

  json margins = json::array();
  for (std::size_t k = 0; k < model.cell_count(); ++k) {
    const auto& m = gain.margins[k];
    const auto& cell = model.config().cells[k];
    margins.push_back(json{{"cell", k + 1},
                           {"kappa", {est.kappa[k].k1, est.kappa[k].k2}},
                           {"stable", m.stable},
                           {"b", {m.b_at_lower, m.b_at_upper}},
                           {"c", {m.c_at_lower, m.c_at_upper}},
                           {"max_real_eigenvalue",
                            eigencheck_prop1(est.kappa[k], cell, bounds.lower, bounds.upper)}});
  }
  const auto& series = *trace.estimator;
  json report{{"schema_version", kSchemaVersion},
              {"command", "estimate"},
              {"time_unit", to_string(config.sim.time_unit)},
              {"slope_bounds", slope_json(bounds)},
              {"margins", margins},
              {"gain",
               {{"inverse", gain.inverse == GainInverse::exact ? "exact" : "pseudo"},
                {"condition", gain.condition},
                {"decoupling_residual", gain.decoupling_residual},
                {"forced", options.force_gain},
                {"K", to_json(gain.gain)}}},
              {"termination", termination_json(trace)},
              {"steps", trace.size() - 1},
              {"error",
               {{"initial_norm", series.error_norm.front()},
                {"final_norm", series.error_norm.back()},
                {"final_voltage_error", series.voltage_error.back()}}}};
  write_report(dir / config.output.report, report);
  out << report.dump(2) << '\n';
  return trace.termination == Termination::completed ? kExitPass : kExitDomainFailure;
}

int cmd_lmi(const CommandOptions& options, std::ostream& out) {
  if (!options.candidate_path) {
    throw ConfigError("--candidate", "the lmi command needs a candidate file");
  }
  const RunConfig config = load_run_config(options.config_path);
  const PackModel model = build_pack_model(config.pack);
  const SlopeBounds bounds = slope_bounds(model.ocv());
  const LmiCandidate candidate = load_lmi_candidate(*options.candidate_path);
  const LmiReport verdict = verify_lmi_prop2(model, candidate, bounds.lower, bounds.upper);

  json report{{"schema_version", kSchemaVersion},
              {"command", "lmi"},
              {"accepted", verdict.accepted},
              {"reason", verdict.reason},
              {"p_min_eigenvalue", verdict.p_min_eigenvalue},
              {"lmi_max_eigenvalue", verdict.lmi_max_eigenvalue},
              {"consistent", verdict.consistent},
              {"slope_bounds", slope_json(bounds)},
              {"block_convention", verdict.block_convention},
              {"bound", verdict.bound}};
  if (verdict.implied_gain) report["implied_gain"] = to_json(*verdict.implied_gain);
  write_report(output_dir(options, config) / config.output.report, report);
  out << report.dump(2) << '\n';
  return verdict.accepted ? kExitPass : kExitDomainFailure;
}

int run(const std::string& command, const CommandOptions& options, std::ostream& out,
        std::ostream& err) {
  try {
    if (command == "verify") return cmd_verify(options, out);
    if (command == "simulate") return cmd_simulate(options, out);
    if (command == "estimate") return cmd_estimate(options, out);
    if (command == "lmi") return cmd_lmi(options, out);
    err << "unknown command: " << command << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UnstableGainError& e) {
    err << "rejected gain: " << e.what() << '\n';
    return kExitDomainFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainFailure;
  } catch (const fs::filesystem_error& e) {
    err << "filesystem error: " << e.what() << '\n';
    return kExitDomainFailure;
  }
}

}  // namespace parapack::cli
