#pragma once

// Step-N Davie–Euler scheme for driftless RDEs dx = σ(x) dw: forward flow φ,
// backward flow ψ, Jacobians and inverse Jacobians, and the measured order of
// the local Euler remainder.

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "roughflow/gaussian_process.hpp"
#include "roughflow/tensor_algebra.hpp"
#include "roughflow/vector_field.hpp"

namespace roughflow {

inline constexpr std::size_t kLastNode = std::numeric_limits<std::size_t>::max();

/// x + Σ_{k≤N} Σ_{|I|=k} g^{k,I} σ_I(x).
Eigen::VectorXd davie_step(const Eigen::VectorXd& x, const GroupElement& g,
                           const VectorFieldModel& sigma);

struct FlowPoint {
  Eigen::VectorXd state;
  Eigen::MatrixXd jacobian;          // Dφ (identity when not propagated)
  Eigen::MatrixXd inverse_jacobian;  // (Dφ)⁻¹ from its own linear RDE
};

/// Flow of one point between grid nodes; forward when from ≤ to, otherwise the
/// backward flow ψ_{t_to, t_from} built from inverted cells in reversed order.
FlowPoint flow_map(const VectorFieldModel& sigma, const LiftedPath& path,
                   const Eigen::VectorXd& x, std::size_t from, std::size_t to,
                   bool with_jacobian);

struct FlowSolution {
  std::vector<double> times;  // nodes first_node..last_node of the path
  std::size_t first_node = 0;
  bool backward = false;
  std::vector<Eigen::VectorXd> starts;
  /// [start][k] at node first_node + k. For a backward flow the start sits at
  /// the last node and entries hold ψ_{t, T}(x).
  std::vector<std::vector<Eigen::VectorXd>> states;
  /// Dφ of the discrete flow, its matrix inverse, and the inverse obtained
  /// independently from the linear RDE dK = −K Σ Dσ_k dw^k.
  std::vector<std::vector<Eigen::MatrixXd>> jacobians;
  std::vector<std::vector<Eigen::MatrixXd>> inverse_jacobians;
  std::vector<std::vector<Eigen::MatrixXd>> inverse_jacobians_rde;
  // provenance; both must outlive the solution for via_psi inversion
  const LiftedPath* path = nullptr;
  const VectorFieldModel* sigma = nullptr;
  std::string sigma_name;
  std::uint64_t path_seed = 0;
  std::size_t path_sample = 0;

  bool has_jacobian() const noexcept { return !jacobians.empty(); }
};

/// φ_{t_from, t} for every node t in [from, to].
FlowSolution solve_flow(const VectorFieldModel& sigma, const LiftedPath& path,
                        std::span<const Eigen::VectorXd> starts, bool with_jacobian,
                        std::size_t from = 0, std::size_t to = kLastNode);

/// ψ_{t, t_to} for every node t in [from, to], started at node `to`.
FlowSolution backward_flow(const VectorFieldModel& sigma, const LiftedPath& path,
                           std::span<const Eigen::VectorXd> starts, bool with_jacobian,
                           std::size_t from = 0, std::size_t to = kLastNode);

enum class InverseMethod { direct_rde, via_psi, matrix_inverse };

/// (Dφ_{t_from, t})⁻¹ at every stride-th stored node (always including the last)
/// for each start: [start][j].
std::vector<std::vector<Eigen::MatrixXd>> inverse_jacobian(const FlowSolution& sol,
                                                           InverseMethod method,
                                                           std::size_t stride = 1);

/// Node offsets used by inverse_jacobian for the given stride.
std::vector<std::size_t> inverse_jacobian_nodes(const FlowSolution& sol, std::size_t stride);

struct ResidualFit {
  double slope = 0.0;  // +∞ when the remainder vanishes to roundoff
  double intercept = 0.0;
  std::vector<double> lengths;
  std::vector<double> residuals;  // RMS over aligned intervals and starts
};

/// |x_t − x_s − Σ w^{I}_{s,t} σ_I(x_s)| on the solved trajectory over dyadic
/// intervals of 2, 4, ... cells up to a quarter of the grid, fitted against |t − s|.
ResidualFit residual_order(const VectorFieldModel& sigma, const LiftedPath& path,
                           std::span<const Eigen::VectorXd> starts);

/// CSV with t, state entries and row-major Jacobian entries for one start.
void write_csv(const std::string& file, const FlowSolution& sol, std::size_t start);

}  // namespace roughflow
