#pragma once

// Truncated tensor algebra T^N(R^d) and its group of group-like elements.
//
// Level k of a tensor is stored as a dense row-major array of d^k
// coefficients: the word (i_1, ..., i_k) with letters in [0, d) sits at
// index i_1 d^{k-1} + ... + i_k. All levels share one contiguous buffer.

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

namespace roughflow {

inline constexpr int kMaxDegree = 3;
inline constexpr int kMaxDim = 8;

class TruncatedTensor {
 public:
  /// Zero tensor.
  TruncatedTensor(int dim, int degree);

  static TruncatedTensor unit(int dim, int degree);
  static TruncatedTensor from_levels(int dim, int degree,
                                     const std::vector<std::vector<double>>& levels);

  int dim() const noexcept { return dim_; }
  int degree() const noexcept { return degree_; }

  std::span<const double> level(int k) const;
  std::span<double> level(int k);
  double scalar() const noexcept { return data_[0]; }

  /// Coefficient of the word (letters in [0, dim)); empty word is level 0.
  double coeff(std::span<const int> word) const;
  double& coeff(std::span<const int> word);

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  TruncatedTensor& operator+=(const TruncatedTensor& o);
  TruncatedTensor& operator-=(const TruncatedTensor& o);
  TruncatedTensor& operator*=(double s);

  /// Level k multiplied by lambda^k.
  TruncatedTensor dilated(double lambda) const;

  bool same_shape(const TruncatedTensor& o) const noexcept {
    return dim_ == o.dim_ && degree_ == o.degree_;
  }

 private:
  int dim_;
  int degree_;
  std::array<std::size_t, kMaxDegree + 2> offset_{};
  std::vector<double> data_;
};

TruncatedTensor operator+(TruncatedTensor a, const TruncatedTensor& b);
TruncatedTensor operator-(TruncatedTensor a, const TruncatedTensor& b);
TruncatedTensor operator*(double s, TruncatedTensor a);

/// Graded convolution truncated at the common degree.
TruncatedTensor tensor_mul(const TruncatedTensor& a, const TruncatedTensor& b);

/// Largest |entry| of a - b.
double max_abs_diff(const TruncatedTensor& a, const TruncatedTensor& b);

/// Element of G^N(R^d). Level 0 is exactly 1; shuffle identities are
/// guaranteed by every producer in this library and can be audited with
/// shuffle_defect().
class GroupElement {
 public:
  explicit GroupElement(TruncatedTensor t);
  static GroupElement identity(int dim, int degree);

  const TruncatedTensor& tensor() const noexcept { return t_; }
  int dim() const noexcept { return t_.dim(); }
  int degree() const noexcept { return t_.degree(); }
  std::span<const double> level(int k) const { return t_.level(k); }

 private:
  TruncatedTensor t_;
};

/// Element of the free nilpotent Lie algebra L^N(R^d) (level 0 is 0).
class LieElement {
 public:
  explicit LieElement(TruncatedTensor t);

  const TruncatedTensor& tensor() const noexcept { return t_; }
  int dim() const noexcept { return t_.dim(); }
  int degree() const noexcept { return t_.degree(); }

 private:
  TruncatedTensor t_;
};

GroupElement operator*(const GroupElement& a, const GroupElement& b);

/// Truncated exponential series.
GroupElement group_exp(const LieElement& l);

/// Truncated logarithm series. Throws DomainError if level 0 is not 1.
LieElement group_log(const TruncatedTensor& g);
LieElement group_log(const GroupElement& g);

/// v = sum_{k=0}^N (1 - g)^{(x)k}.
GroupElement group_inverse(const GroupElement& g);

/// max_k |g^k|_2^{1/k}, a homogeneous norm equivalent to Carnot-Caratheodory.
double homogeneous_norm(const GroupElement& g);

GroupElement dilate(const GroupElement& g, double lambda);

/// exp of a level-1 vector: v^{(x)k} / k! at level k.
GroupElement segment_signature(const Eigen::Ref<const Eigen::VectorXd>& increment,
                               int degree);

/// Step-N signature of the piecewise-linear path through the points
/// (Chen product of segment signatures). Needs at least two points.
GroupElement pl_signature(std::span<const Eigen::VectorXd> points, int degree);

/// Lie bracket [a, b] = a(x)b - b(x)a.
TruncatedTensor lie_bracket(const TruncatedTensor& a, const TruncatedTensor& b);

/// Degree-graded Dynkin map: a word of length k goes to its left-normed
/// bracket divided by k. Fixes exactly the Lie elements.
TruncatedTensor dynkin_projection(const TruncatedTensor& t);

/// Largest violation of the degree-2 and degree-3 shuffle identities,
/// relative to max(1, |g|_inf).
double shuffle_defect(const TruncatedTensor& g);

/// Largest violation of the Lie conditions (antisymmetric level 2, fixed point
/// of dynkin_projection).
double lie_defect(const TruncatedTensor& t);

nlohmann::json to_json(const TruncatedTensor& t);
TruncatedTensor tensor_from_json(const nlohmann::json& j);

}  // namespace roughflow
