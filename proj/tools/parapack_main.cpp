#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "parapack/commands.hpp"

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("PARAPACK_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }

  CLI::App app{"Parallel Li-ion pack model, simulator and observer toolkit"};
  app.require_subcommand(1);
  parapack::cli::CommandOptions options;

  const auto add = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", options.config_path, "Run configuration (JSON)")->required();
    sub->add_option("--out", options.out_dir, "Output directory (overrides output.directory)");
    return sub;
  };
  add("verify", "Cross-check the closed-form model against the dense Kirchhoff solve");
  add("simulate", "Integrate the pack under the configured current profile");
  add("estimate", "Co-simulate plant and observer")
      ->add_flag("--force-gain", options.force_gain, "Accept kappa blocks that fail the stability test");
  add("lmi", "Verify a dissipation certificate")
      ->add_option("--candidate", options.candidate_path, "Candidate decision variables (JSON)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : parapack::cli::kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return parapack::cli::run(command, options, std::cout, std::cerr);
}
