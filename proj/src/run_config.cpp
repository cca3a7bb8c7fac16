#include "parapack/run_config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include "parapack/errors.hpp"

namespace parapack {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void require_object(const json& doc, const std::string& path) {
  if (!doc.is_object()) throw ConfigError(path, "expected an object");
}

void reject_unknown(const json& doc, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : doc.items()) {
    if (!keys.contains(key)) throw ConfigError(join(path, key), "unknown key");
  }
}

const json& field(const json& doc, const std::string& path, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw ConfigError(join(path, key), "missing required field");
  return *it;
}

double number(const json& doc, const std::string& path) {
  if (!doc.is_number()) throw ConfigError(path, "expected a number");
  const double v = doc.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

double positive(const json& doc, const std::string& path) {
  const double v = number(doc, path);
  if (!(v > 0.0)) throw ConfigError(path, "must be > 0");
  return v;
}

double optional_number(const json& doc, const std::string& path, const char* key, double fallback) {
  const auto it = doc.find(key);
  return it == doc.end() ? fallback : number(*it, join(path, key));
}

std::vector<double> numbers(const json& doc, const std::string& path) {
  if (!doc.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(number(doc[i], index(path, i)));
  return out;
}

std::string text(const json& doc, const std::string& path) {
  if (!doc.is_string()) throw ConfigError(path, "expected a string");
  return doc.get<std::string>();
}

CellParams parse_cell(const json& doc, const std::string& path) {
  require_object(doc, path);
  reject_unknown(doc, path, {"series_resistance", "rc_resistance", "rc_capacitance", "capacity"});
  CellParams cell{};
  cell.series_resistance =
      positive(field(doc, path, "series_resistance"), join(path, "series_resistance"));
  cell.rc_resistance = positive(field(doc, path, "rc_resistance"), join(path, "rc_resistance"));
  cell.rc_capacitance = positive(field(doc, path, "rc_capacitance"), join(path, "rc_capacitance"));
  cell.capacity = positive(field(doc, path, "capacity"), join(path, "capacity"));
  if (cell.series_resistance < 1e-12) {
    throw ConfigError(join(path, "series_resistance"), "must be >= 1e-12 ohm");
  }
  return cell;
}

PackConfig parse_pack(const json& doc, const std::string& path) {
  require_object(doc, path);
  reject_unknown(doc, path, {"cells", "ocv"});
  const json& cells = field(doc, path, "cells");
  const std::string cells_path = join(path, "cells");
  if (!cells.is_array()) throw ConfigError(cells_path, "expected an array of cells");
  if (cells.size() < 2) throw ConfigError(cells_path, "a parallel pack needs n >= 2 cells");
  std::vector<CellParams> parsed;
  for (std::size_t i = 0; i < cells.size(); ++i) parsed.push_back(parse_cell(cells[i], index(cells_path, i)));

  const json& ocv = field(doc, path, "ocv");
  const std::string ocv_path = join(path, "ocv");
  require_object(ocv, ocv_path);
  reject_unknown(ocv, ocv_path, {"coefficients"});
  const std::string coeff_path = join(ocv_path, "coefficients");
  auto coefficients = numbers(field(ocv, ocv_path, "coefficients"), coeff_path);
  if (coefficients.size() < 2) throw ConfigError(coeff_path, "need degree >= 1");
  return PackConfig{std::move(parsed), OcvCurve(std::move(coefficients))};
}

TimeUnit parse_unit(const json& doc, const std::string& path) {
  const std::string unit = text(doc, path);
  if (unit == "seconds") return TimeUnit::seconds;
  if (unit == "hours") return TimeUnit::hours;
  throw ConfigError(path, "expected \"seconds\" or \"hours\"");
}

SimConfig parse_sim(const json& doc, const std::string& path, std::size_t cells) {
  require_object(doc, path);
  reject_unknown(doc, path,
                 {"t_end", "dt", "time_unit", "initial_state", "profile", "convergence_check"});
  SimConfig sim;
  sim.t_end = positive(field(doc, path, "t_end"), join(path, "t_end"));
  if (doc.contains("dt")) sim.dt = positive(doc["dt"], join(path, "dt"));
  if (sim.t_end < sim.dt) throw ConfigError(join(path, "t_end"), "must be >= dt");
  if (doc.contains("time_unit")) sim.time_unit = parse_unit(doc["time_unit"], join(path, "time_unit"));
  if (doc.contains("convergence_check")) {
    if (!doc["convergence_check"].is_boolean()) {
      throw ConfigError(join(path, "convergence_check"), "expected a boolean");
    }
    sim.convergence_check = doc["convergence_check"].get<bool>();
  }

  const std::string init_path = join(path, "initial_state");
  const json& init = field(doc, path, "initial_state");
  require_object(init, init_path);
  reject_unknown(init, init_path, {"soc", "relaxation"});
  const std::string soc_path = join(init_path, "soc");
  sim.initial_soc = numbers(field(init, init_path, "soc"), soc_path);
  if (sim.initial_soc.size() != cells) throw ConfigError(soc_path, "need one SOC per cell");
  for (std::size_t i = 0; i < cells; ++i) {
    if (sim.initial_soc[i] < 0.0 || sim.initial_soc[i] > 1.0) {
      throw ConfigError(index(soc_path, i), "SOC must lie in [0,1]");
    }
  }
  if (init.contains("relaxation")) {
    const std::string rel_path = join(init_path, "relaxation");
    sim.initial_relaxation = numbers(init["relaxation"], rel_path);
    if (sim.initial_relaxation.size() != cells) {
      throw ConfigError(rel_path, "need one relaxation voltage per cell");
    }
  } else {
    sim.initial_relaxation.assign(cells, 0.0);
  }
  sim.profile = parse_signal(field(doc, path, "profile"), join(path, "profile"), false);
  return sim;
}

KappaBlock parse_kappa_block(const json& doc, const std::string& path) {
  if (!doc.is_array() || doc.size() != 2) throw ConfigError(path, "expected [kappa1, kappa2]");
  return KappaBlock{number(doc[0], index(path, 0)), number(doc[1], index(path, 1))};
}

EstimatorConfig parse_estimator(const json& doc, const std::string& path, std::size_t cells) {
  require_object(doc, path);
  reject_unknown(doc, path,
                 {"kappa", "soc_offset", "relaxation_estimate", "gain_inverse", "disturbance"});
  EstimatorConfig est;
  const std::string kappa_path = join(path, "kappa");
  const json& kappa = field(doc, path, "kappa");
  if (!kappa.is_array()) throw ConfigError(kappa_path, "expected an array of [kappa1, kappa2] blocks");
  if (kappa.size() == 2 && kappa[0].is_number()) {
    // A single block shared by every cell.
    est.kappa.assign(cells, parse_kappa_block(kappa, kappa_path));
  } else {
    if (kappa.size() != cells) throw ConfigError(kappa_path, "need one kappa block per cell");
    for (std::size_t i = 0; i < cells; ++i) est.kappa.push_back(parse_kappa_block(kappa[i], index(kappa_path, i)));
  }
  est.soc_offset = optional_number(doc, path, "soc_offset", 0.0);
  if (doc.contains("relaxation_estimate")) {
    const std::string rel_path = join(path, "relaxation_estimate");
    est.relaxation_estimate = numbers(doc["relaxation_estimate"], rel_path);
    if (est.relaxation_estimate.size() != cells) {
      throw ConfigError(rel_path, "need one value per cell");
    }
  } else {
    est.relaxation_estimate.assign(cells, 0.0);
  }
  if (doc.contains("gain_inverse")) {
    const std::string inv_path = join(path, "gain_inverse");
    const std::string mode = text(doc["gain_inverse"], inv_path);
    if (mode == "exact") {
      est.gain_inverse = GainInverse::exact;
    } else if (mode == "pseudo") {
      est.gain_inverse = GainInverse::pseudo;
    } else {
      throw ConfigError(inv_path, "expected \"exact\" or \"pseudo\"");
    }
  }
  if (doc.contains("disturbance")) {
    const std::string dist_path = join(path, "disturbance");
    const json& dist = doc["disturbance"];
    require_object(dist, dist_path);
    reject_unknown(dist, dist_path, {"current", "voltage"});
    if (dist.contains("current")) {
      est.disturbance.current = parse_signal(dist["current"], join(dist_path, "current"), true);
    }
    if (dist.contains("voltage")) {
      est.disturbance.voltage = parse_signal(dist["voltage"], join(dist_path, "voltage"), true);
    }
  }
  return est;
}

OutputConfig parse_output(const json& doc, const std::string& path) {
  require_object(doc, path);
  reject_unknown(doc, path, {"directory", "trace", "report", "stride"});
  OutputConfig out;
  if (doc.contains("directory")) out.directory = text(doc["directory"], join(path, "directory"));
  if (doc.contains("trace")) out.trace = text(doc["trace"], join(path, "trace"));
  if (doc.contains("report")) out.report = text(doc["report"], join(path, "report"));
  if (doc.contains("stride")) {
    const json& stride = doc["stride"];
    if (!stride.is_number_integer() || stride.get<long long>() < 1) {
      throw ConfigError(join(path, "stride"), "expected a positive integer");
    }
    out.stride = stride.get<std::size_t>();
  }
  return out;
}

Matrix parse_matrix(const json& doc, const std::string& path) {
  if (!doc.is_array() || doc.empty()) throw ConfigError(path, "expected a non-empty array of rows");
  const std::size_t rows = doc.size();
  if (!doc[0].is_array()) throw ConfigError(index(path, 0), "expected a row array");
  const std::size_t cols = doc[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = numbers(doc[i], index(path, i));
    if (row.size() != cols) throw ConfigError(index(path, i), "ragged matrix row");
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return m;
}

}  // namespace

std::string to_string(TimeUnit unit) {
  return unit == TimeUnit::hours ? "hours" : "seconds";
}

Signal parse_signal(const json& doc, const std::string& path, bool allow_presets) {
  require_object(doc, path);
  const std::string kind = text(field(doc, path, "kind"), join(path, "kind"));
  try {
    if (kind == "zero") {
      reject_unknown(doc, path, {"kind"});
      return Signal::zero();
    }
    if (kind == "constant") {
      reject_unknown(doc, path, {"kind", "value"});
      return Signal::constant(number(field(doc, path, "value"), join(path, "value")));
    }
    if (kind == "sinusoid") {
      reject_unknown(doc, path, {"kind", "amplitude", "frequency", "phase", "offset"});
      SineSignal s;
      s.amplitude = number(field(doc, path, "amplitude"), join(path, "amplitude"));
      s.frequency = number(field(doc, path, "frequency"), join(path, "frequency"));
      s.phase = optional_number(doc, path, "phase", 0.0);
      s.offset = optional_number(doc, path, "offset", 0.0);
      return Signal(s);
    }
    if (kind == "table") {
      reject_unknown(doc, path, {"kind", "points"});
      const std::string pts_path = join(path, "points");
      const json& pts = field(doc, path, "points");
      if (!pts.is_array() || pts.empty()) throw ConfigError(pts_path, "expected [[t, value], ...]");
      TableSignal table;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto pair = numbers(pts[i], index(pts_path, i));
        if (pair.size() != 2) throw ConfigError(index(pts_path, i), "expected [t, value]");
        if (!table.points.empty() && !(pair[0] > table.points.back().first)) {
          throw ConfigError(index(pts_path, i), "table times must be strictly increasing");
        }
        table.points.emplace_back(pair[0], pair[1]);
      }
      return Signal(std::move(table));
    }
    if (kind == "pulse") {
      reject_unknown(doc, path, {"kind", "amplitude", "start", "end"});
      PulseSignal p;
      p.amplitude = number(field(doc, path, "amplitude"), join(path, "amplitude"));
      p.start = number(field(doc, path, "start"), join(path, "start"));
      p.end = number(field(doc, path, "end"), join(path, "end"));
      if (!(p.end >= p.start)) throw ConfigError(join(path, "end"), "must be >= start");
      return Signal(p);
    }
    if (kind == "preset") {
      if (!allow_presets) throw ConfigError(join(path, "kind"), "presets are only valid for disturbances");
      reject_unknown(doc, path, {"kind", "name"});
      const std::string name = text(field(doc, path, "name"), join(path, "name"));
      if (name == "current_sine") return current_sine_preset();
      if (name == "voltage_sine") return voltage_sine_preset();
      throw ConfigError(join(path, "name"), "unknown preset \"" + name + "\"");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(join(path, "kind"), "unknown signal kind \"" + kind + "\"");
}

RunConfig parse_run_config(const json& doc) {
  require_object(doc, "");
  reject_unknown(doc, "", {"schema_version", "pack", "sim", "estimator", "output"});
  const json& version = field(doc, "", "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported schema version (expected " +
                                            std::to_string(kSchemaVersion) + ")");
  }
  PackConfig pack = parse_pack(field(doc, "", "pack"), "pack");
  const std::size_t cells = pack.cells.size();
  RunConfig config{kSchemaVersion, std::move(pack), parse_sim(field(doc, "", "sim"), "sim", cells),
                   std::nullopt, OutputConfig{}};
  if (doc.contains("estimator")) config.estimator = parse_estimator(doc["estimator"], "estimator", cells);
  if (doc.contains("output")) config.output = parse_output(doc["output"], "output");
  return config;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("malformed JSON: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_json_file(path));
}

LmiCandidate parse_lmi_candidate(const json& doc) {
  require_object(doc, "");
  reject_unknown(doc, "", {"schema_version", "P", "Q", "gamma", "tau", "note"});
  LmiCandidate c;
  c.p = parse_matrix(field(doc, "", "P"), "P");
  c.q = parse_matrix(field(doc, "", "Q"), "Q");
  c.gamma = number(field(doc, "", "gamma"), "gamma");
  const auto tau = numbers(field(doc, "", "tau"), "tau");
  c.tau = Eigen::Map<const Vector>(tau.data(), static_cast<Eigen::Index>(tau.size()));
  return c;
}

LmiCandidate load_lmi_candidate(const std::filesystem::path& path) {
  return parse_lmi_candidate(read_json_file(path));
}

}  // namespace parapack
