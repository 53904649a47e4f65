#pragma once

// Drift vector fields b: R^d → R^d with regularity metadata.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>

namespace roughflow {

enum class DriftKind { zero, constant, smooth, linear, weierstrass, lp_block, smooth_bump, custom };

std::string to_string(DriftKind kind);

class DriftModel {
 public:
  using Evaluator = std::function<void(std::span<const double>, std::span<double>)>;

  /// kappa is the nominal Hölder exponent (+∞ for smooth fields); sup_bound,
  /// when set, is a bound on |b| checked by validate().
  DriftModel(int dim, Evaluator b, DriftKind kind, std::string name,
             double kappa = std::numeric_limits<double>::infinity(),
             std::optional<double> sup_bound = std::nullopt);

  static DriftModel zero(int dim);
  static DriftModel constant(const Eigen::VectorXd& c);
  /// b^c(x) = a·sin(x_{(c+1) mod d} + 0.5c) + 0.5a·cos(x_c): bounded, Lipschitz.
  static DriftModel smooth(int dim, double amplitude = 0.5);
  /// b(x) = A x.
  static DriftModel linear(const Eigen::MatrixXd& a);
  /// a + weight·b, with the smaller Hölder exponent.
  static DriftModel sum(const DriftModel& a, const DriftModel& b, double weight);

  int dim() const noexcept { return dim_; }
  DriftKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  double kappa() const noexcept { return kappa_; }
  const std::optional<double>& sup_bound() const noexcept { return sup_bound_; }

  Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  void eval_into(std::span<const double> x, std::span<double> out) const { b_(x, out); }

  /// DomainError if b is non-finite or exceeds its sup bound on random probes in [−box, box]^d.
  void validate(std::size_t probes, std::uint64_t seed, double box = 4.0) const;

 private:
  int dim_;
  Evaluator b_;
  DriftKind kind_;
  std::string name_;
  double kappa_;
  std::optional<double> sup_bound_;
};

}  // namespace roughflow
