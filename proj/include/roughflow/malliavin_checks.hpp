#pragma once

// Malliavin covariance matrix of the driftless flow by 2D Young quadrature
// against the covariance of the driver, the scaling of its smallest eigenvalue,
// and the empirical smoothing decay of E[(J_r)⁻¹ ∂^β f(X_r)].

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "roughflow/gaussian_process.hpp"
#include "roughflow/vector_field.hpp"

namespace roughflow {

struct CovMatrixReport {
  double s = 0.0, t = 0.0;
  Eigen::VectorXd x;
  Eigen::MatrixXd gamma;
  Eigen::VectorXd eigenvalues;    // ascending
  double symmetry_error = 0.0;    // max |γ − γ*| before symmetrization
  std::size_t cells = 0;
  double coarse_change = 0.0;     // |γ_M − γ_{M/2}| / |γ_M| (Frobenius)
  double observed_order = std::numeric_limits<double>::quiet_NaN();  // from M/4, M/2, M
  double scaling_exponent = std::numeric_limits<double>::quiet_NaN();  // set by lambda_min_scaling
  double hurst = std::numeric_limits<double>::quiet_NaN();
  std::string sigma_name;
  std::uint64_t path_seed = 0;
  std::size_t path_sample = 0;

  double lambda_min() const { return eigenvalues.size() ? eigenvalues[0] : 0.0; }
};

struct MalliavinOptions {
  double tolerance = 0.05;  // largest accepted coarse_change
};

/// γ = Σ_{i,j} A_i □R(cell_i × cell_j) A_j* over the grid cells in [s, t], with
/// A = J_{t←r} σ(X_r), J_{t←r} = J_t (J_r)⁻¹ averaged over the cell endpoints
/// and R the analytic covariance attached to the path. s and t must be grid
/// nodes. ConvergenceError (with the observed order) when halving the grid
/// changes γ by more than the tolerance.
CovMatrixReport malliavin_covariance(const VectorFieldModel& sigma, const LiftedPath& path,
                                     const Eigen::VectorXd& x, double s, double t,
                                     const MalliavinOptions& options = {});

struct EigenScalingFit {
  std::vector<double> lengths;
  std::vector<double> lambda_min;
  double exponent = 0.0;
  double intercept = 0.0;
  double min_over_scaled = 0.0;  // min λ_min / length^{2H}
  std::vector<CovMatrixReport> reports;
};

/// λ_min(γ_{[s, s+ℓ]}) for ℓ = horizon·2^{−k}, k = 0..levels−1, and its log-log slope.
EigenScalingFit lambda_min_scaling(const VectorFieldModel& sigma, const LiftedPath& path,
                                   const Eigen::VectorXd& x, int levels, double s = 0.0);

struct SmoothingDecayConfig {
  int beta = 1;                 // derivative order, 1 or 2
  double frequency = 4.0;       // k in f(x) = cos(k x_1)
  int levels = 6;               // r = horizon·2^{−i}, i = 0..levels
  std::size_t min_cells = 8;    // grid cells below the smallest r (multiplicative case)
  std::size_t samples = 20000;
  std::uint64_t seed = 0;
  Eigen::VectorXd x;            // empty: π/(2k) e_1 for β = 1, 0 for β = 2 (largest |∂^β f|)
  int degree = 2;
  double noise_sigmas = 30.0;   // estimates below this many standard errors are dropped
};

struct SmoothingDecayResult {
  std::vector<double> rs;          // increasing
  std::vector<double> estimates;   // |E[(J_r)⁻¹ ∂^β f(X_r)]|
  std::vector<double> stderrs;
  std::vector<double> oracle;      // closed form when σ is constant, else empty
  std::size_t fit_first = 0, fit_last = 0;  // inclusive index range used by the fit
  bool truncated = false;          // the noise floor cut the range
  double slope = 0.0;
  double intercept = 0.0;
  double start_value = 0.0;        // |∂^β f(x)|
  std::size_t samples = 0;
  double hurst = std::numeric_limits<double>::quiet_NaN();
};

/// Monte-Carlo estimate over dyadic r, fitted on r ≥ k^{−1/H} down to the noise
/// floor. For β = 2 the matrix J⁻¹ ∂²f J^{−*} is reported in Frobenius norm.
/// ConfigError when fewer than two points remain for the fit.
SmoothingDecayResult smoothing_decay_experiment(const VectorFieldModel& sigma,
                                                const CovarianceModel& model,
                                                const SmoothingDecayConfig& config);

nlohmann::json to_json(const CovMatrixReport& report);
nlohmann::json to_json(const EigenScalingFit& fit);
nlohmann::json to_json(const SmoothingDecayResult& result);

}  // namespace roughflow
