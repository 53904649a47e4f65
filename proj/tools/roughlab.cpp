// roughlab <kind> [flags]: runs one experiment suite and writes report.json,
// metrics.csv and summary.md next to the suite's data files.
// Exit status: 0 all gated metrics pass, 1 metric or numerical failure, 2 usage error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "roughflow/cli_harness.hpp"
#include "roughflow/errors.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

void add_experiment_options(CLI::App& sub, roughflow::ExperimentConfig& c, std::uint64_t& seed) {
  sub.add_option("--seed", seed, "Master seed (mandatory)")->required();
  sub.add_option("--out", c.output_dir, "Output directory")->capture_default_str();
  sub.add_option("--samples", c.samples, "Sample count (0 = suite default)")->capture_default_str();
  sub.add_option("--grid", c.grid, "Grid cells, a power of two (0 = suite default)")->capture_default_str();
  sub.add_option("--hurst", c.hurst, "Hurst index")->capture_default_str();
  sub.add_option("--degree", c.degree, "Signature degree")->capture_default_str();
  sub.add_option("--kappa", c.kappa, "Hölder exponent of synthetic drifts")->capture_default_str();
  sub.add_option("--dim", c.dim, "State dimension")->capture_default_str();
  sub.add_option("--refinement", c.refinement, "Sample cells per lifted cell")->capture_default_str();
  sub.add_option("--sigma", c.sigma, "identity | smooth_elliptic | diagonal_linear (empty = suite default)");
  sub.add_option("--drift", c.drift, "zero | smooth | weierstrass | lp_block | smooth_bump")->capture_default_str();
  sub.add_option("--delta", c.delta, "Initial perturbation for uniqueness")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiment runner for rough differential equations with irregular drift"};
  app.set_config("--config", "", "INI file; a section named after the subcommand holds its keys");
  app.require_subcommand(1);

  roughflow::ExperimentConfig config;
  std::uint64_t seed = 0;
  for (const auto& name : roughflow::experiment_kind_names()) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " suite");
    add_experiment_options(*sub, config, seed);
    sub->callback([&config, name] { config.kind = roughflow::parse_experiment_kind(name); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kPass : kUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e) == 0 ? kPass : kUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  config.seed = seed;

  try {
    const auto report = roughflow::run(config);
    for (auto format : {roughflow::ReportFormat::json, roughflow::ReportFormat::csv,
                        roughflow::ReportFormat::markdown})
      roughflow::emit_report(report, format, config.output_dir);
    for (const auto& m : report.metrics) {
      std::printf("%-4s %-44s %.12g\n", m.gated ? (m.pass ? "PASS" : "FAIL") : "INFO", m.name.c_str(), m.value);
    }
    std::printf("%s: %s in %.3g s\n", roughflow::to_string(config.kind).c_str(),
                report.passed() ? "PASS" : "FAIL", report.wall_clock_seconds);
    return report.passed() ? kPass : kFail;
  } catch (const roughflow::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const roughflow::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kFail;
  } catch (const roughflow::ConvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << " (measured exponent " << e.exponent() << ")\n";
    return kFail;
  } catch (const roughflow::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << " (smallest eigenvalue " << e.smallest_eigenvalue()
              << ")\n";
    return kFail;
  } catch (const roughflow::DivergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << " (step " << e.step() << ")\n";
    return kFail;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kFail;
  }
}
