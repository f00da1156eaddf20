#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tskit/cli/config.hpp"
#include "tskit/cli/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tskit: fixed points, multipliers, branches and envelopes of black-box cycle maps"};
  std::string config_path;
  std::string out_dir;
  bool quiet = false;
  app.add_option("config", config_path, "Run configuration (YAML)")->required();
  app.add_option("--out", out_dir, "Output directory (overrides output.directory)");
  app.add_flag("--quiet", quiet, "Do not print the run report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  tskit::cli::RunConfig config;
  try {
    config = tskit::cli::load_config(config_path);
    if (!out_dir.empty()) config.output.directory = out_dir;
  } catch (const tskit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const tskit::cli::RunReport report = tskit::cli::run_task(config);
    if (!quiet) std::cout << report.to_text();
    return report.success ? 0 : 1;
  } catch (const tskit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "task failed: " << e.what() << "\n";
    return 1;
  }
}
