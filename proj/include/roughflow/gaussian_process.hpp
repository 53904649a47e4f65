#pragma once

// Driving Gaussian processes: covariance models, exact grid sampling, the
// geometric lift to a rough path, and covariance diagnostics.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "roughflow/tensor_algebra.hpp"

namespace roughflow {

enum class CovarianceKind { fbm, custom };

/// ½(t^{2H} + s^{2H} − |t−s|^{2H}); DomainError unless 0 < H < 1 and s, t ≥ 0.
double fbm_covariance(double s, double t, double hurst);

class CovarianceModel {
 public:
  using Evaluator = std::function<double(double, double)>;

  static CovarianceModel fbm(double hurst, double horizon = 1.0);
  static CovarianceModel custom(Evaluator r, double horizon, std::string name);

  CovarianceKind kind() const noexcept { return kind_; }
  /// Hurst index for the fbm kind, NaN otherwise.
  double hurst() const noexcept { return hurst_; }
  /// ρ = 1/(2H) for the fbm kind, NaN otherwise.
  double rho() const noexcept { return 0.5 / hurst_; }
  double horizon() const noexcept { return horizon_; }
  const std::string& name() const noexcept { return name_; }

  double operator()(double s, double t) const { return eval_(s, t); }
  /// Rectangular increment over [s1,s2]×[t1,t2].
  double rect(double s1, double s2, double t1, double t2) const;

  /// Covariance of the increments W_{t_{k+1}} − W_{t_k} over the given nodes.
  Eigen::MatrixXd increment_covariance(std::span<const double> times) const;

 private:
  CovarianceModel() = default;
  CovarianceKind kind_ = CovarianceKind::custom;
  double hurst_ = 0.0;
  double horizon_ = 1.0;
  std::string name_;
  Evaluator eval_;
};

/// Nodes k·T/M for k = 0..M.
std::vector<double> uniform_times(std::size_t steps, double horizon);

struct GridPathSample {
  std::vector<double> times;
  int dim = 1;
  std::uint64_t seed = 0;
  /// values[sample][component][node], every component starting at 0.
  std::vector<std::vector<std::vector<double>>> values;

  std::size_t samples() const noexcept { return values.size(); }
  std::size_t steps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
  Eigen::VectorXd point(std::size_t sample, std::size_t node) const;
};

/// Deterministic path on the given nodes, shifted so that it starts at 0.
GridPathSample sample_from_function(std::span<const double> times, int dim,
                                    const std::function<Eigen::VectorXd(double)>& w);

enum class SamplerMethod { cholesky, circulant };

/// Exact-covariance sampler for one covariance model on a fixed grid. The
/// factorization is computed once; each draw depends only on (seed, index).
class GaussianSampler {
 public:
  GaussianSampler(const CovarianceModel& model, std::size_t steps,
                  SamplerMethod method = SamplerMethod::cholesky);
  ~GaussianSampler();
  GaussianSampler(const GaussianSampler&) = delete;
  GaussianSampler& operator=(const GaussianSampler&) = delete;

  const std::vector<double>& times() const noexcept { return times_; }
  SamplerMethod method() const noexcept { return method_; }
  /// Relative jitter added to the diagonal before factorization succeeded (0 if none).
  double jitter() const noexcept { return jitter_; }

  /// One scalar path on the grid, values[0] = 0.
  std::vector<double> draw(std::uint64_t seed, std::uint64_t index, int component) const;

  GridPathSample sample(std::size_t n, std::uint64_t seed, int dim = 1) const;

 private:
  struct Circulant;
  std::vector<double> times_;
  SamplerMethod method_;
  double jitter_ = 0.0;
  Eigen::MatrixXd chol_;  // lower factor of the node covariance (nodes 1..M)
  std::unique_ptr<Circulant> circ_;
};

GridPathSample sample_fbm_grid(const CovarianceModel& model, std::size_t steps, std::size_t n,
                               std::uint64_t seed, int dim = 1,
                               SamplerMethod method = SamplerMethod::cholesky);

/// Piecewise-constant-in-cells geometric rough path.
class LiftedPath {
 public:
  LiftedPath(std::vector<double> times, std::vector<GroupElement> increments, int refinement);

  int dim() const { return increments_.front().dim(); }
  int degree() const { return increments_.front().degree(); }
  int refinement() const noexcept { return refinement_; }
  std::size_t cells() const noexcept { return increments_.size(); }
  const std::vector<double>& times() const noexcept { return times_; }
  double time(std::size_t node) const { return times_.at(node); }
  const GroupElement& increment(std::size_t cell) const { return increments_.at(cell); }
  const std::vector<GroupElement>& increments() const noexcept { return increments_; }

  /// w(t_i, t_j) as the Chen product of the cells between nodes i ≤ j.
  GroupElement w(std::size_t i, std::size_t j) const;
  /// First-level path value relative to node 0.
  Eigen::VectorXd level1(std::size_t node) const;

  /// Same rough path observed on every factor-th node.
  LiftedPath coarsen(std::size_t factor) const;

  void attach_covariance(CovarianceModel model) { covariance_ = std::move(model); }
  const std::optional<CovarianceModel>& covariance() const noexcept { return covariance_; }

  // provenance
  std::uint64_t seed = 0;
  std::size_t sample_index = 0;

 private:
  std::vector<double> times_;
  std::vector<GroupElement> increments_;
  std::vector<Eigen::VectorXd> level1_;
  int refinement_;
  std::optional<CovarianceModel> covariance_;
};

/// Lift of one sample: every coarse cell collects `refinement` consecutive
/// sample cells and carries their piecewise-linear signature.
LiftedPath lift_path(const GridPathSample& sample, std::size_t index, int degree,
                     int refinement = 1);

struct NondeterminismFit {
  double alpha = 0.0;
  double log_cw = 0.0;
  double cw = 0.0;           // exp(log_cw)
  double cw_lower = 0.0;     // min over lengths of Var / ℓ^α
  std::vector<double> lengths;
  std::vector<double> conditional_variance;
  std::vector<double> unconditional_variance;
  double jitter = 0.0;       // relative diagonal regularization used (0 if none)
  bool compliant = true;     // conditional variance not negligible at every length
};

/// Var[W_t − W_s | increments outside (s,t)] over centered dyadic intervals on
/// an M-step grid, by Gaussian conditioning on the increment covariance.
NondeterminismFit nondeterminism_exponent(const CovarianceModel& model, std::size_t steps);

struct CovarianceDiagnostics {
  double a = 0.0, b = 0.0;
  double sigma2 = 0.0;  // □_{[a,b]²}R
  double kappa = 0.0;   // lower bound for the (1,ρ)-variation, square-rooted
  int outer_level = 0, inner_level = 0;  // dyadic partitions attaining kappa
  std::size_t quadruples = 0;
  std::size_t disjoint_violations = 0;
  std::size_t nested_violations = 0;
  double kappa_exponent = 0.0;  // fit of κ_{a,b} against b − a
  std::vector<double> kappa_lengths, kappa_values;
};

/// (1,ρ)-variation of R over [a,b]² maximized greedily over pairs of dyadic
/// partitions with breakpoints on the grid (a lower bound).
double one_rho_variation(const CovarianceModel& model, std::span<const double> grid, double rho,
                         int* outer_level = nullptr, int* inner_level = nullptr);

CovarianceDiagnostics covariance_diagnostics(const CovarianceModel& model,
                                             std::span<const double> grid, std::uint64_t seed,
                                             std::size_t quadruples = 10000);

struct YoungIntegral {
  double value = 0.0;
  double error_estimate = 0.0;  // |I_M − I_{M/2}|
};

/// Σ f(cell_i) g(cell_j) □_{cell_i × cell_j} R for per-cell values on the nodes.
double young_2d_sum(std::span<const double> f_cells, std::span<const double> g_cells,
                    const CovarianceModel& model, std::span<const double> times);

/// 2D Young integral of f⊗g against R over [0,T] with midpoint cell values on a
/// uniform M-step grid, with a half-grid comparison as error estimate.
YoungIntegral young_2d_integral(const std::function<double(double)>& f,
                                const std::function<double(double)>& g,
                                const CovarianceModel& model, std::size_t steps);

/// CSV with columns t, w0..w{d-1} for one sample.
void write_csv(const std::string& path, const GridPathSample& sample, std::size_t index);

nlohmann::json to_json(const LiftedPath& path);

}  // namespace roughflow
