#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "parapack/pack_model.hpp"

namespace parapack::cli {

// Exit codes.
inline constexpr int kExitPass = 0;
inline constexpr int kExitDomainFailure = 1;
inline constexpr int kExitUsage = 2;

struct CommandOptions {
  std::string config_path;
  std::optional<std::string> candidate_path;
  std::optional<std::string> out_dir;
  bool force_gain = false;
};

/// Oracle cross-checks on a built model: closed-form inverse residual, agreement
/// with the LU inverse, and branch currents / voltages on `samples` random
/// states against the dense Kirchhoff solve.
nlohmann::json run_oracle_suite(const PackModel& model, std::size_t samples = 100,
                                std::uint64_t seed = 20200101);

int cmd_verify(const CommandOptions& options, std::ostream& out);
int cmd_simulate(const CommandOptions& options, std::ostream& out);
int cmd_estimate(const CommandOptions& options, std::ostream& out);
int cmd_lmi(const CommandOptions& options, std::ostream& out);

/// Dispatches by name and maps exceptions onto the exit-code contract;
/// diagnostics go to `err`.
int run(const std::string& command, const CommandOptions& options, std::ostream& out,
        std::ostream& err);

}  // namespace parapack::cli
