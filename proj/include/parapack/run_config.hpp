#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parapack/estimator.hpp"
#include "parapack/pack_model.hpp"
#include "parapack/signal.hpp"
#include "parapack/simulator.hpp"

namespace parapack {

inline constexpr int kSchemaVersion = 1;

// Label only: parameters are taken verbatim in whatever unit is declared.
enum class TimeUnit { seconds, hours };

std::string to_string(TimeUnit unit);

struct SimConfig {
  double t_end = 0.0;
  double dt = 0.002;
  TimeUnit time_unit = TimeUnit::seconds;
  std::vector<double> initial_soc;
  std::vector<double> initial_relaxation;
  CurrentProfile profile;
  bool convergence_check = false;
};

struct EstimatorConfig {
  KappaGain kappa;
  double soc_offset = 0.0;
  std::vector<double> relaxation_estimate;
  GainInverse gain_inverse = GainInverse::pseudo;
  Disturbance disturbance;
};

struct OutputConfig {
  std::string directory = "out";
  std::string trace = "trace.csv";
  std::string report = "report.json";
  std::size_t stride = 1;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  PackConfig pack;
  SimConfig sim;
  std::optional<EstimatorConfig> estimator;
  OutputConfig output;
};

/// Parses and validates a run configuration. Unknown keys are rejected; every
/// failure is a ConfigError carrying the JSON path of the offending field.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

Signal parse_signal(const nlohmann::json& doc, const std::string& path, bool allow_presets);

LmiCandidate parse_lmi_candidate(const nlohmann::json& doc);
LmiCandidate load_lmi_candidate(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace parapack
