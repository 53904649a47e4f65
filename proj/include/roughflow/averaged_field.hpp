#pragma once

// The averaged field Tb_t(x) = ∫_0^t (Dφ_{0,r}(x))⁻¹ b(φ_{0,r}(x)) dr on a
// time × space grid, and Monte-Carlo scaling experiments for its frequency
// decay and time regularity.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "roughflow/drift_model.hpp"
#include "roughflow/gaussian_process.hpp"
#include "roughflow/vector_field.hpp"

namespace roughflow {

/// Tensor grid on the box [lower, upper]; an axis with one node sits at lower.
struct SpaceGrid {
  Eigen::VectorXd lower, upper;
  std::vector<std::size_t> nodes;

  static SpaceGrid single(const Eigen::VectorXd& x);
  static SpaceGrid box(const Eigen::VectorXd& center, double half_width, std::size_t nodes_per_axis);

  int dim() const noexcept { return static_cast<int>(nodes.size()); }
  std::size_t size() const noexcept;
  /// Node with flat index `flat` (first axis fastest).
  Eigen::VectorXd point(std::size_t flat) const;
};

struct AveragedFieldGrid {
  std::vector<double> times;
  SpaceGrid space;
  /// values[time node][space node] = Tb_t(x).
  std::vector<std::vector<Eigen::VectorXd>> values;
  std::string drift_name;
  std::string sigma_name;
  double hurst = std::numeric_limits<double>::quiet_NaN();
  int degree = 0;
  std::size_t samples = 1;
  std::uint64_t seed = 0;

  static AveragedFieldGrid from_function(
      std::vector<double> times, SpaceGrid space,
      const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& tb);

  int dim() const noexcept { return space.dim(); }
  /// Multilinear interpolation in space (linear extrapolation outside the box).
  Eigen::VectorXd at(std::size_t time_node, const Eigen::VectorXd& x) const;
  /// Tb_{s,t}(x) = Tb_t(x) − Tb_s(x) between time nodes.
  Eigen::VectorXd increment(std::size_t s, std::size_t t, const Eigen::VectorXd& x) const;
};

/// Composite trapezoid rule on every path cell, stored on every time_stride-th node.
AveragedFieldGrid eval_averaged_field(const DriftModel& b, const VectorFieldModel& sigma,
                                      const LiftedPath& path, const SpaceGrid& space,
                                      std::size_t time_stride = 1);

/// Exponent of max_x |Tb_{s,t}(x)| over aligned dyadic intervals of one field.
double pathwise_time_exponent(const AveragedFieldGrid& field);

struct FrequencyDecayConfig {
  std::vector<int> js = {0, 1, 2, 3, 4, 5, 6, 7};
  double q = 2.0;
  double s = 0.25, t = 0.75;
  std::size_t samples = 2000;
  std::size_t steps = std::size_t{1} << 17;  // grid on [0, t]
  std::uint64_t seed = 1;
  Eigen::VectorXd x;  // start point; zero when empty
  int degree = 2;
};

struct FrequencyDecayResult {
  std::vector<int> js;
  std::vector<double> moments;        // E[|(T b_j)_{s,t}(x)|^q]^{1/q}
  std::vector<double> log_stderr;     // Monte-Carlo standard error of log moment
  double slope = 0.0;                 // against j·log 2
  double intercept = 0.0;
  double slope_ci = 0.0;              // 95% half-width, fit and Monte-Carlo error combined
  bool widened = false;               // Monte-Carlo error dominates or exceeds 10%
  std::size_t samples = 0;
};

/// Probes b_j(x) = cos(2^j x_1) e_1 on independent driver samples. Constant σ
/// uses φ_{0,r}(x) = x + σ w_r directly on the fine grid.
FrequencyDecayResult frequency_decay_experiment(const VectorFieldModel& sigma,
                                                const CovarianceModel& model,
                                                const FrequencyDecayConfig& config);

struct TimeRegularityFit {
  double nu = 0.0;
  double intercept = 0.0;
  std::vector<double> lengths;
  std::vector<double> moments;  // E[|Tb_{s,t}(x)|^q]^{1/q} pooled over aligned intervals
  std::size_t pairs = 0;
  bool exceeds_half = false;
};

/// Needs ≥ 64 time nodes on a uniform grid shared by every field and ≥ 500 fields.
TimeRegularityFit time_regularity_estimate(std::span<const AveragedFieldGrid> fields, double q);

struct TimeRegularityConfig {
  int j = 6;
  double q = 8.0;
  std::size_t cells = 64;
  std::size_t substeps = 8;  // path cells per field cell
  double window = 0.0;       // field horizon; ≤ 0 selects cells·2^{−j/H}
  std::size_t samples = 500;
  std::uint64_t seed = 1;
  Eigen::VectorXd x;
  int degree = 2;
};

/// Fields of the probe cos(2^j x_1) e_1 on independent samples, then the fit.
TimeRegularityFit time_regularity_experiment(const VectorFieldModel& sigma,
                                             const CovarianceModel& model,
                                             const TimeRegularityConfig& config);

/// CSV with t, space coordinates and Tb components.
void write_csv(const std::string& file, const AveragedFieldGrid& field);
nlohmann::json to_json(const FrequencyDecayResult& r);
nlohmann::json to_json(const TimeRegularityFit& r);

}  // namespace roughflow
