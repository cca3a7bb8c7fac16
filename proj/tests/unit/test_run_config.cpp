#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "parapack/errors.hpp"
#include "parapack/run_config.hpp"

using namespace parapack;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "schema_version": 1,
    "pack": {
      "cells": [
        {"series_resistance": 0.004, "rc_resistance": 0.0025, "rc_capacitance": 1500, "capacity": 1.7},
        {"series_resistance": 0.0035, "rc_resistance": 0.0015, "rc_capacitance": 2000, "capacity": 2.0}
      ],
      "ocv": {"coefficients": [3.0896, 1.1627, -2.3821, 2.1870, -0.5444, -0.1939, 0.0582]}
    },
    "sim": {
      "t_end": 10,
      "initial_state": {"soc": [0.1, 0.2]},
      "profile": {"kind": "constant", "value": 0.5}
    }
  })");
}

std::string error_path(const json& doc) {
  try {
    parse_run_config(doc);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("minimal configuration and defaults", "[config]") {
  const RunConfig c = parse_run_config(minimal());
  CHECK(c.pack.cells.size() == 2);
  CHECK(c.sim.dt == 0.002);
  CHECK(c.sim.time_unit == TimeUnit::seconds);
  CHECK(c.sim.initial_relaxation == std::vector<double>{0.0, 0.0});
  CHECK_FALSE(c.sim.convergence_check);
  CHECK_FALSE(c.estimator.has_value());
  CHECK(c.output.directory == "out");
  CHECK(c.output.stride == 1);
  CHECK(c.sim.profile(3.0) == 0.5);
}

TEST_CASE("errors carry the offending field path", "[config]") {
  json doc = minimal();
  doc["pack"]["cells"][1]["series_resistance"] = -0.001;
  CHECK(error_path(doc) == "pack.cells[1].series_resistance");

  doc = minimal();
  doc["pack"]["cells"].erase(1);
  CHECK(error_path(doc) == "pack.cells");

  doc = minimal();
  doc["sim"]["initial_state"]["soc"][0] = 1.5;
  CHECK(error_path(doc) == "sim.initial_state.soc[0]");

  doc = minimal();
  doc["sim"]["extra"] = 1;
  CHECK(error_path(doc) == "sim.extra");

  doc = minimal();
  doc["schema_version"] = 2;
  CHECK(error_path(doc) == "schema_version");

  doc = minimal();
  doc["sim"]["profile"] = {{"kind", "preset"}, {"name", "current_sine"}};
  CHECK(error_path(doc) == "sim.profile.kind");

  doc = minimal();
  doc["sim"]["profile"] = {{"kind", "table"}, {"points", {{0.0, 1.0}, {0.0, 2.0}}}};
  CHECK(error_path(doc) == "sim.profile.points[1]");

  doc = minimal();
  doc["sim"]["dt"] = 20;
  CHECK(error_path(doc) == "sim.t_end");

  doc = minimal();
  doc["output"] = {{"stride", 0}};
  CHECK(error_path(doc) == "output.stride");

  doc = minimal();
  doc["pack"]["ocv"]["coefficients"] = {3.0};
  CHECK(error_path(doc) == "pack.ocv.coefficients");
}

TEST_CASE("estimator block", "[config]") {
  json doc = minimal();
  doc["estimator"] = json::parse(R"({
    "kappa": [-0.1, -0.1],
    "soc_offset": -0.05,
    "disturbance": {
      "current": {"kind": "preset", "name": "current_sine"},
      "voltage": {"kind": "sinusoid", "amplitude": 0.001, "frequency": 0.5}
    }
  })");
  const RunConfig c = parse_run_config(doc);
  REQUIRE(c.estimator.has_value());
  CHECK(c.estimator->kappa.size() == 2);
  CHECK(c.estimator->kappa[1].k2 == -0.1);
  CHECK(c.estimator->soc_offset == -0.05);
  CHECK(c.estimator->gain_inverse == GainInverse::pseudo);
  CHECK(c.estimator->disturbance.current.is_modulated());

  doc["estimator"]["kappa"] = {{-0.1, -0.1}, {-0.2, -0.3}};
  CHECK(parse_run_config(doc).estimator->kappa[1].k1 == -0.2);
  doc["estimator"]["kappa"] = {{-0.1, -0.1}};
  CHECK(error_path(doc) == "estimator.kappa");
  doc["estimator"]["kappa"] = {-0.1, -0.1};
  doc["estimator"]["gain_inverse"] = "inverse";
  CHECK(error_path(doc) == "estimator.gain_inverse");
}

TEST_CASE("malformed files", "[config]") {
  const auto path = std::filesystem::temp_directory_path() / "parapack_malformed.json";
  {
    std::ofstream f(path);
    f << "{\"schema_version\": 1, \"pack\": ";
  }
  CHECK_THROWS_AS(load_run_config(path), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/parapack.json"), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("LMI candidate parsing", "[config]") {
  const json doc = json::parse(R"({"P": [[1, 0], [0, 1]], "Q": [[1], [2]], "gamma": 3, "tau": [0.5]})");
  const LmiCandidate c = parse_lmi_candidate(doc);
  CHECK(c.p.rows() == 2);
  CHECK(c.q(1, 0) == 2.0);
  CHECK(c.gamma == 3.0);
  CHECK(c.tau.size() == 1);
  CHECK_THROWS_AS(parse_lmi_candidate(json::parse(R"({"P": [[1, 0], [0]], "Q": [[1]], "gamma": 1, "tau": []})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_lmi_candidate(json::parse(R"({"P": [[1]], "Q": [[1]], "gamma": 1, "tau": [1], "x": 0})")),
                  ConfigError);
}
