#pragma once

// Reproducible experiment runner: configuration, suites built on the library
// modules, gated metrics, and report emission as JSON, CSV or a markdown summary.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "roughflow/drift_model.hpp"
#include "roughflow/vector_field.hpp"

namespace roughflow {

enum class ExperimentKind { sample, lift, solve, convergence, averaging, malliavin, uniqueness, spaces };

std::string to_string(ExperimentKind kind);
/// ConfigError for unknown names.
ExperimentKind parse_experiment_kind(const std::string& name);
std::vector<std::string> experiment_kind_names();

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::sample;
  std::optional<std::uint64_t> seed;  // mandatory
  double hurst = 0.4;
  int degree = 2;
  int dim = 2;
  std::size_t grid = 0;        // 0 selects the suite default; otherwise a power of two ≥ 16
  std::size_t refinement = 1;  // sample cells per lifted cell
  std::size_t samples = 0;     // 0 selects the suite default
  std::string sigma;  // identity | smooth_elliptic | diagonal_linear; empty selects the suite default
  std::string drift = "smooth";           // zero | smooth | weierstrass | lp_block | smooth_bump
  double kappa = 0.5;          // Hölder exponent of synthetic drifts
  double delta = 1e-6;         // initial perturbation (uniqueness)
  std::string output_dir = "out";

  /// ConfigError unless every field is within its documented range.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);

/// σ and b selectors shared by the suites. ConfigError for unknown names.
VectorFieldModel make_sigma(const std::string& name, int dim);
DriftModel make_drift(const std::string& name, int dim, double kappa, std::uint64_t seed);

struct Metric {
  std::string name;
  double value = 0.0;
  std::string comparator;  // "<=", ">=", "|x-target|<=" or "report"
  double target = 0.0;
  double tolerance = 0.0;
  bool gated = true;
  bool pass = true;
  std::string provenance;  // closed-form, scaling-law, identity or measurement

  static Metric at_most(std::string name, double value, double bound, std::string provenance);
  static Metric at_least(std::string name, double value, double bound, std::string provenance);
  static Metric within(std::string name, double value, double target, double tolerance,
                       std::string provenance);
  /// Ungated value.
  static Metric report(std::string name, double value, std::string provenance);
};

struct RunReport {
  ExperimentConfig config;
  std::vector<Metric> metrics;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> artifacts;  // file names inside config.output_dir

  bool passed() const;
};

/// Runs the configured suite, writing its data files to config.output_dir.
/// ConfigError for invalid configurations; library errors propagate.
RunReport run(const ExperimentConfig& config);

enum class ReportFormat { json, csv, markdown };

/// Writes report.json, metrics.csv or summary.md into the directory and returns
/// the file path. Floats carry 12 significant digits; the wall clock appears in
/// the markdown summary only, so the numeric files are reproducible byte for
/// byte. IoError when the directory is not writable.
std::string emit_report(const RunReport& report, ReportFormat format, const std::string& dir);

nlohmann::json to_json(const RunReport& report);

/// Value rounded to 12 significant digits.
double round12(double v);

struct UniquenessConfig {
  double hurst = 0.4;
  double kappa = 0.5;
  double delta = 1e-6;
  std::size_t paths = 50;
  std::size_t grid = 1024;
  int dim = 1;
  int levels = 10;          // Weierstrass levels J
  double gap_factor = 100;  // a path passes when sup gap ≤ gap_factor · δ
  int degree = 2;
  double start = 0.3;       // x_0 = start · (1, …, 1)
  std::uint64_t seed = 0;
};

struct UniquenessResult {
  std::vector<double> ratios;  // sup_t |x_t − x'_t| / δ per path
  double fraction_within = 0.0;
  double median_ratio = 0.0;
  double max_ratio = 0.0;
  UniquenessConfig config;
};

/// Direct Davie solves with σ = Id and a Weierstrass drift of exponent κ from
/// x_0 and x_0 + δ e (|e| = 1) on each of `paths` fBm samples.
UniquenessResult uniqueness_experiment(const UniquenessConfig& config);

nlohmann::json to_json(const UniquenessResult& result);

}  // namespace roughflow
