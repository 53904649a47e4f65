#pragma once

// RDEs with drift dx = b(x) dt + σ(x) dw: the direct Davie scheme, the flow
// transform z' = (Dφ_{0,t}(z))⁻¹ b(φ_{0,t}(z)) with x = φ_{0,t}(z), the sewing
// integrator, the nonlinear Young equation driven by an averaged field, and
// stability experiments.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "roughflow/averaged_field.hpp"
#include "roughflow/drift_model.hpp"
#include "roughflow/gaussian_process.hpp"
#include "roughflow/vector_field.hpp"

namespace roughflow {

enum class DriftMethod { direct, flow_transform };
enum class TimeStepper { euler, heun };

std::string to_string(DriftMethod method);

struct DriftSolveReport {
  DriftMethod method = DriftMethod::direct;
  TimeStepper stepper = TimeStepper::euler;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> z;     // flow transform only
  double reconstruction_residual = 0.0;  // max |x_t − φ_{0,t}(z_t)| on checked nodes
  std::size_t grid = 0;
  std::uint64_t path_seed = 0;
  std::size_t path_sample = 0;
  std::string drift_name, sigma_name;
};

/// x_{i+1} = x_i + b(x_i) Δt + Σ_{|I|≤N} g_i^I σ_I(x_i).
DriftSolveReport solve_direct(const DriftModel& b, const VectorFieldModel& sigma,
                              const LiftedPath& path, const Eigen::VectorXd& x0);

/// Euler or Heun on z with φ_{0,t_i} and its Jacobian from a fresh driftless
/// solve at every evaluation; x_i = φ_{0,t_i}(z_i). The reconstruction is
/// re-checked by an independent solve on every check_stride-th node.
DriftSolveReport solve_flow_transform(const DriftModel& b, const VectorFieldModel& sigma,
                                      const LiftedPath& path, const Eigen::VectorXd& x0,
                                      TimeStepper stepper = TimeStepper::euler,
                                      std::size_t check_stride = 16);

/// max_i |a.x_i − b.x_i| on a common grid.
double sup_distance(const DriftSolveReport& a, const DriftSolveReport& b);

using Germ = std::function<Eigen::VectorXd(double s, double t)>;

struct SewingOptions {
  double tolerance = 1e-9;  // on the extrapolated values, relative to max(1, |𝒜|)
  int min_depth = 3;
  int max_depth = 14;
};

struct SewingResult {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;  // 𝒜_t at the grid nodes, 𝒜_{t_0} = 0
  int depth = 0;
  std::vector<double> level_gaps;       // max_t |S_ℓ(t) − S_{ℓ−1}(t)|
  double additivity_exponent = 0.0;     // fit of max |δA_{s,u,t}| against |t − s|
  double additivity_residual = 0.0;     // max |δA| at the finest level
};

/// Limit of Riemann sums Σ A_{u,v} over dyadic refinements of every grid cell,
/// accelerated by extrapolating the geometric decay of successive levels.
/// ConvergenceError (with the additivity exponent) if max_depth is reached.
SewingResult sewing_integrate(const Germ& germ, std::span<const double> grid,
                              const SewingOptions& options = {});

struct NlyOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 0;  // 0 selects the number of time nodes + 1
};

struct NlyResult {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> theta;
  double residual = 0.0;  // max_t |θ_t − θ_0 − Σ Tb_{t_i,t_{i+1}}(θ_{t_i})|
  std::size_t iterations = 0;
  double nu = 0.0;        // pathwise time exponent of the driving field
};

/// θ_t = θ_0 + ∫ (Tb)_{dr}(θ_r) by Picard iteration on the sewing sums with
/// germ Tb_{s,t}(θ_s) over the field's time grid. ConvergenceError when the
/// field's time exponent is ≤ 1/2 (outside the Young regime).
NlyResult nly_solve(const AveragedFieldGrid& field, const Eigen::VectorXd& theta0,
                    const NlyOptions& options = {});

struct StabilityReport {
  double gap = 0.0;         // sup_t |z_1(t) − z_2(t)|
  double input_gap = 0.0;   // |x_1 − x_2|
  double field_gap = 0.0;   // sup over the sampled grid of |Tb_1 − Tb_2|
  double k_emp = 0.0;       // gap / (input_gap + field_gap), 0 when both vanish
};

/// Flow-transform solves for (b1, x1) and (b2, x2) on one path; the field gap
/// uses the space grid (a box around x1 and x2 when empty).
StabilityReport stability_gap(const DriftModel& b1, const DriftModel& b2,
                              const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                              const VectorFieldModel& sigma, const LiftedPath& path,
                              const SpaceGrid& space = {});

void write_csv(const std::string& file, const DriftSolveReport& report);
nlohmann::json to_json(const DriftSolveReport& report);
nlohmann::json to_json(const StabilityReport& report);

}  // namespace roughflow
