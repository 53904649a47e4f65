#pragma once

// Truncated multivariate Taylor polynomials ("jets") in up to three variables.
// Evaluating a vector field on jets instead of doubles yields all of its
// partial derivatives at a point up to the jet order.

#include <array>
#include <cstddef>
#include <span>

namespace roughflow {

inline constexpr int kJetMaxVars = 3;
inline constexpr int kJetMaxOrder = 5;
inline constexpr std::size_t kJetCapacity = 56;  // monomials of degree ≤ 5 in 3 variables

/// Coefficients c_α of Σ_α c_α (x − x₀)^α. Monomials are ordered by total
/// degree, so a lower-order truncation is a prefix of the coefficient array.
class Jet {
 public:
  Jet() = default;
  Jet(int vars, int order, double value = 0.0);
  /// The coordinate function x_i expanded around x₀ with x₀_i = value.
  static Jet variable(int vars, int order, int i, double value);

  int vars() const noexcept { return vars_; }
  int order() const noexcept { return order_; }
  double value() const noexcept { return c_[0]; }
  std::size_t size() const noexcept;

  /// Taylor coefficient of the monomial with the given exponents.
  double coeff(std::span<const int> exponents) const;
  /// Partial derivative ∂^α at x₀ (coefficient times α!).
  double partial(std::span<const int> exponents) const;

  /// ∂/∂x_i as a jet of one lower order.
  Jet derivative(int i) const;
  Jet truncated(int order) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s);
  Jet operator-() const;

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }
  friend Jet operator/(double s, const Jet& a);
  friend Jet operator/(const Jet& a, const Jet& b);

  friend Jet sin(const Jet& a);
  friend Jet cos(const Jet& a);
  friend Jet exp(const Jet& a);
  friend Jet tanh(const Jet& a);

 private:
  // Composition f(a) from the Taylor coefficients f^{(m)}(a₀)/m!, m = 0..order.
  Jet compose(const std::array<double, kJetMaxOrder + 1>& taylor) const;

  int vars_ = 1;
  int order_ = 0;
  std::array<double, kJetCapacity> c_{};
};

}  // namespace roughflow
