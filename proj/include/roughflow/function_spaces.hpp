#pragma once

// Littlewood–Paley blocks on periodic grids, Besov and weighted Hölder norms,
// synthetic drifts of prescribed regularity, and Garsia–Rodemich–Rumsey
// Hölder estimators for sampled paths and two-parameter fields.

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

namespace roughflow {

/// Real values on the periodic grid [0, length)^dim with `nodes` points per
/// axis (a power of two); the first axis varies fastest.
struct GridFunction {
  int dim = 1;
  std::size_t nodes = 0;
  double length = 1.0;
  std::vector<double> values;

  static GridFunction sample(int dim, std::size_t nodes, double length,
                             const std::function<double(std::span<const double>)>& f);
  double spacing() const noexcept { return length / static_cast<double>(nodes); }
  std::size_t size() const noexcept { return values.size(); }
  /// ShapeError or DomainError unless the invariants hold.
  void validate() const;
};

struct BesovParams {
  double alpha = 0.0;
  double p = std::numeric_limits<double>::infinity();
  double r = std::numeric_limits<double>::infinity();
  int max_block = 1;  // J
};

/// Low-pass profile: 1 on [0, 3/4], raised cosine down to 0 at 1.
double lp_cutoff(double radius) noexcept;

/// Multiplier of block j at radial frequency |ξ| (in wavenumbers 2π/length):
/// the cutoff itself for j = −1, cutoff(2^{−j−1}|ξ|) − cutoff(2^{−j}|ξ|) for j ≥ 0.
double lp_multiplier(int j, double radius) noexcept;

/// Largest block index with 2^j at most the Nyquist wavenumber.
int max_block(const GridFunction& f);

/// Δ_j f through the discrete Fourier transform. DomainError beyond Nyquist.
GridFunction lp_block(const GridFunction& f, int j);

/// Δ_{−1} f, …, Δ_J f from a single forward transform.
std::vector<GridFunction> lp_blocks(const GridFunction& f, int max_j);

/// Spectral derivative along one axis.
GridFunction spectral_derivative(const GridFunction& f, int axis);

/// (h^dim Σ |f|^p)^{1/p}, or max |f| for p = ∞.
double lp_norm(const GridFunction& f, double p);

/// (Σ_{j=−1}^{J} 2^{rαj} ‖Δ_j f‖_p^r)^{1/r}, sup over j for r = ∞.
double besov_norm(const GridFunction& f, const BesovParams& params);

/// sup over axis shifts h of |f(x + h) − f(x)| / |h|^α, α ∈ (0, 1].
double grid_holder_seminorm(const GridFunction& f, double alpha);

struct BlockSpectrum {
  std::vector<int> blocks;
  std::vector<double> sup_norms;
  std::vector<double> l2_norms;
};

BlockSpectrum block_spectrum(const GridFunction& f, int max_j);

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using Weight = std::function<double(double)>;

/// w ≡ 1 and w(r) = 1 + r.
Weight unit_weight();
Weight linear_weight();

struct HolderProbe {
  Eigen::VectorXd lower, upper;      // probe box
  std::size_t probes = 2000;
  std::vector<double> scales = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};  // pair distances
  std::uint64_t seed = 0;
  double fd_step = 1e-5;             // central-difference step for Df
};

struct WeightedHolderReport {
  double value = 0.0;          // sup part + quotient part
  double sup_part = 0.0;       // Σ_{k≤m} sup |D^k f| / w_k(|x|)
  double quotient_part = 0.0;  // sup |D^m f(x) − D^m f(y)| / (|x − y|^{α−m} w_m(|x| + |y|))
  int derivative_order = 0;    // m = ⌈α⌉ − 1
};

/// Monte-Carlo lower estimate of the weighted Hölder norm of order α ∈ (0, 2].
/// Missing weights default to 1.
WeightedHolderReport weighted_holder_norm(const VectorFn& f, double alpha,
                                          const std::vector<Weight>& weights,
                                          const HolderProbe& probe);

struct HolderScan {
  std::vector<double> scales;
  std::vector<double> oscillation;  // max |f(x + h e) − f(x)| over probes and unit directions
  double exponent = 0.0;            // fitted slope of log oscillation against log h
};

HolderScan holder_exponent_scan(const VectorFn& f, const HolderProbe& probe);

struct SynthDriftOptions {
  int dim = 1;
  int levels = 10;         // J for weierstrass
  double omega = 1.0;      // base angular frequency
  int block = 3;           // frequency index for lp_block
  double amplitude = 1.0;
  double radius = 1.0;     // support radius for smooth_bump
};

/// weierstrass: b^c(x) = A Σ_{j≤J} 2^{−κj} cos(2^j ω x_c + phase_{j,c});
/// lp_block: b^c(x) = A cos(2^j ω x_c + phase_c);
/// smooth_bump: b(x) = A ψ(|x|/ρ) v with ψ(s) = exp(1 − 1/(1 − s²)) and a unit vector v.
/// Phases and v come from the seed. DomainError for κ ≤ 0 (weierstrass).
DriftModel synth_drift(DriftKind kind, double kappa, std::uint64_t seed,
                       const SynthDriftOptions& options = {});

/// Exact Lipschitz constant of the smooth bump: A ψ'(3^{−1/4}) / ρ.
double smooth_bump_lipschitz(double amplitude, double radius);

struct GrrOptions {
  int levels = 4;                  // κ_f evaluated on the grid coarsened by 2^{levels−1}, …, 1
  double growth_threshold = 0.1;   // fitted growth exponent of κ_f that flags divergence
};

struct GrrReport {
  double alpha = 0.0, p = 0.0;
  double kappa = 0.0;              // (∫∫ |f(u) − f(v)|^p / |u − v|^{αp+1})^{1/p} on the finest grid
  double constant = 0.0;           // C in |f(t) − f(s)| ≤ C κ |t − s|^{α−1/p}
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;          // max |f(t) − f(s)| / (κ |t − s|^{α−1/p})
  std::vector<std::size_t> grid_sizes;
  std::vector<double> kappa_levels;
  double growth_exponent = 0.0;    // slope of log κ against log grid size
  bool divergent = false;          // not in this GRR class
};

/// 8 · 4^{1/p} (αp + 1)/(αp − 1): the classical constant with Ψ(u) = u^p, p(u) = u^{α+1/p}.
double grr_constant(double alpha, double p);

/// One-parameter GRR check on a uniform grid (values at grid nodes). DomainError
/// unless αp > 1; ConfigError unless the grid coarsens 2^{levels−1} times.
GrrReport grr_bound(std::span<const double> times, std::span<const double> values,
                    double alpha, double p, const GrrOptions& options = {});

/// Rectangular version for f(t, x) on uniform time × line grids (values[t][x]):
/// |□ f| ≤ C κ |s − t|^{α₁−1/p} |x − y|^{α₂−1/p} with C the product of the
/// one-parameter constants. DomainError unless α₁p > 1 and α₂p > 1.
GrrReport grr_bound_rect(std::span<const double> times, std::span<const double> space,
                         const std::vector<std::vector<double>>& values, double alpha_time,
                         double alpha_space, double p, const GrrOptions& options = {});

void write_csv(const std::string& file, const GridFunction& f);
nlohmann::json to_json(const BlockSpectrum& spectrum);
nlohmann::json to_json(const GrrReport& report);

}  // namespace roughflow
