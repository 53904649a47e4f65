#pragma once

// Diffusion vector fields σ = (σ_1, ..., σ_d) on R^d with exact derivatives
// obtained by evaluating the same code on Taylor jets.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "roughflow/jet.hpp"

namespace roughflow {

inline constexpr int kFieldMaxDim = kJetMaxVars;

using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kFieldMaxDim, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kFieldMaxDim, kFieldMaxDim>;

class VectorFieldModel {
 public:
  /// Column-major output: out[i*d + c] is component c of σ_i(x).
  using ValueFn = std::function<void(std::span<const double>, std::span<double>)>;
  using JetFn = std::function<void(std::span<const Jet>, std::span<Jet>)>;

  VectorFieldModel(int dim, ValueFn value, JetFn jets, std::string name,
                   std::optional<double> ellipticity = std::nullopt);

  /// Wraps a callable usable as f(std::span<const S> x, std::span<S> out) for
  /// S = double and S = Jet.
  template <class F>
  static VectorFieldModel from_generic(int dim, F f, std::string name,
                                       std::optional<double> ellipticity = std::nullopt) {
    return VectorFieldModel(
        dim, [f](std::span<const double> x, std::span<double> out) { f(x, out); },
        [f](std::span<const Jet> x, std::span<Jet> out) { f(x, out); }, std::move(name),
        ellipticity);
  }

  /// σ ≡ A (columns are the constant fields).
  static VectorFieldModel constant(const Eigen::MatrixXd& a);
  static VectorFieldModel identity(int dim) { return constant(Eigen::MatrixXd::Identity(dim, dim)); }
  /// σ_i(x) = A_i x.
  static VectorFieldModel linear(std::vector<Eigen::MatrixXd> a);
  /// σ_i(x) = a_i x_i e_i: decoupled scalar linear equations.
  static VectorFieldModel diagonal_linear(const Eigen::VectorXd& a);
  /// σ(x) = I + a·B(x) with bounded trigonometric entries B_{ci}(x) =
  /// sin(x_{(c+i) mod d} + 0.7c + 1.3i); ellipticity (1 − a·d)².
  static VectorFieldModel smooth_elliptic(int dim, double amplitude = 0.2);

  int dim() const noexcept { return dim_; }
  const std::string& name() const noexcept { return name_; }
  const std::optional<double>& ellipticity() const noexcept { return ellipticity_; }
  bool is_constant() const noexcept { return constant_; }
  /// The matrix of a constant field (empty otherwise).
  const Eigen::MatrixXd& constant_value() const noexcept { return constant_value_; }

  /// d×d matrix whose columns are σ_i(x).
  Eigen::MatrixXd eval(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  void eval_into(std::span<const double> x, std::span<double> out) const { value_(x, out); }
  /// Jets of every σ_i^c around x up to the given order, column-major as eval.
  std::vector<Jet> jets(std::span<const double> x, int order) const;
  /// Dσ_i(x) as a d×d matrix (row c, column k holds ∂_k σ_i^c).
  Eigen::MatrixXd jacobian(int i, const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  int dim_;
  ValueFn value_;
  JetFn jets_;
  std::string name_;
  std::optional<double> ellipticity_;
  bool constant_ = false;
  Eigen::MatrixXd constant_value_;
};

/// Words σ_I(x), their Jacobians Dσ_I(x), and the generators M_I(x) of the
/// inverse-Jacobian expansion, for every word of length 1..degree. Entry
/// [k-1][w] belongs to the word of length k with row-major index w.
struct WordFields {
  int dim = 0;
  int degree = 0;
  bool with_derivatives = false;
  std::vector<std::vector<SmallVec>> value;
  std::vector<std::vector<SmallMat>> jacobian;
  std::vector<std::vector<SmallMat>> inverse_generator;
};

WordFields word_fields(const VectorFieldModel& sigma, std::span<const double> x, int degree,
                       bool with_derivatives);

/// σ_I(x) for a word of letters in 0..d−1 (first letter acts last).
Eigen::VectorXd sigma_operator(const VectorFieldModel& sigma, std::span<const int> word,
                               const Eigen::Ref<const Eigen::VectorXd>& x);

/// Largest gap between the jet Jacobians and central differences of σ over
/// random probes in [−box, box]^d.
double derivative_check(const VectorFieldModel& sigma, std::size_t probes, std::uint64_t seed,
                        double box = 2.0, double step = 1e-5);

/// Smallest value of min_z |σ(x)z|² / |z|² (an eigenvalue of σᵀσ) over random probe points.
double ellipticity_estimate(const VectorFieldModel& sigma, std::size_t probes,
                            std::uint64_t seed, double box = 2.0);

}  // namespace roughflow
