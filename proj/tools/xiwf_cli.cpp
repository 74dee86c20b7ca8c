#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "xiwf/config.hpp"
#include "xiwf/experiment.hpp"

int main(int argc, char** argv) {
  using namespace xiwf;
  CLI::App app{"Simulation and duality checks for two-type Cannings models with selection"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replicates;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  app.add_option("--config", config_path, "experiment config (dotted key = value)")->required();
  app.add_option("--seed", seed, "master seed, overrides run.seed");
  app.add_option("--out", out_dir, "output directory, overrides output.dir");
  app.add_option("--replicates", replicates, "overrides run.replicates");
  app.add_option("--format", format, "csv or json, overrides output.format")
      ->check(CLI::IsMember({"csv", "json"}));

  const char* help[] = {
      "forward trajectories of the discrete model",
      "ancestral lineage counts of the discrete model",
      "sampling duality check on the discrete model",
      "jump-diffusion paths of the frequency process",
      "event logs of the branching-coalescing dual",
      "moment duality check between the two limit processes",
      "critical selection pressure estimate",
      "fixation probability from the dual stationary law",
      "recurrence probe of the dual chain"};
  std::size_t h = 0;
  for (const auto& name : experiment_commands())
    app.add_subcommand(name, help[h++])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? code : kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    ConfigFile file = ConfigFile::load(config_path);
    if (seed) file.set("run.seed", std::to_string(*seed));
    if (replicates) file.set("run.replicates", std::to_string(*replicates));
    if (out_dir) file.set("output.dir", *out_dir);
    if (format) file.set("output.format", *format);
    const ExperimentConfig config = build_experiment(file);
    const Report report = run_experiment(command, config);
    for (const auto& path : write_report(report, config.output.dir, config.output.format))
      std::cout << path << "\n";
    if (report.results.contains("verdict"))
      std::cout << command << ": " << report.results["verdict"].get<std::string>() << "\n";
    if (report.diagnostics.contains("refusal"))
      std::cerr << "refused: " << report.diagnostics["refusal"].get<std::string>() << "\n";
    return report.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
