#include "roughflow/tensor_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "roughflow/errors.hpp"

namespace roughflow {
namespace {

std::size_t ipow(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

void require_same_shape(const TruncatedTensor& a, const TruncatedTensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("tensor shape mismatch: (d=" + std::to_string(a.dim()) +
                     ", N=" + std::to_string(a.degree()) + ") vs (d=" +
                     std::to_string(b.dim()) + ", N=" + std::to_string(b.degree()) + ")");
  }
}

}  // namespace

TruncatedTensor::TruncatedTensor(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 1 || dim > kMaxDim) throw ShapeError("tensor dim must be in [1, 8]");
  if (degree < 1 || degree > kMaxDegree) throw ShapeError("tensor degree must be in [1, 3]");
  offset_[0] = 0;
  for (int k = 0; k <= degree; ++k) offset_[k + 1] = offset_[k] + ipow(dim, k);
  data_.assign(offset_[degree + 1], 0.0);
}

TruncatedTensor TruncatedTensor::unit(int dim, int degree) {
  TruncatedTensor t(dim, degree);
  t.data_[0] = 1.0;
  return t;
}

TruncatedTensor TruncatedTensor::from_levels(int dim, int degree,
                                             const std::vector<std::vector<double>>& levels) {
  TruncatedTensor t(dim, degree);
  if (levels.size() != static_cast<std::size_t>(degree + 1)) {
    throw ShapeError("expected " + std::to_string(degree + 1) + " levels");
  }
  for (int k = 0; k <= degree; ++k) {
    auto dst = t.level(k);
    if (levels[k].size() != dst.size()) {
      throw ShapeError("level " + std::to_string(k) + " must have " +
                       std::to_string(dst.size()) + " entries");
    }
    for (double v : levels[k]) {
      if (!std::isfinite(v)) throw DomainError("tensor coefficients must be finite");
    }
    std::copy(levels[k].begin(), levels[k].end(), dst.begin());
  }
  return t;
}

std::span<const double> TruncatedTensor::level(int k) const {
  if (k < 0 || k > degree_) throw ShapeError("level index out of range");
  return {data_.data() + offset_[k], offset_[k + 1] - offset_[k]};
}

std::span<double> TruncatedTensor::level(int k) {
  if (k < 0 || k > degree_) throw ShapeError("level index out of range");
  return {data_.data() + offset_[k], offset_[k + 1] - offset_[k]};
}

double TruncatedTensor::coeff(std::span<const int> word) const {
  return const_cast<TruncatedTensor*>(this)->coeff(word);
}

double& TruncatedTensor::coeff(std::span<const int> word) {
  const int k = static_cast<int>(word.size());
  if (k > degree_) throw ShapeError("word longer than tensor degree");
  std::size_t idx = 0;
  for (int letter : word) {
    if (letter < 0 || letter >= dim_) throw ShapeError("letter out of range");
    idx = idx * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(letter);
  }
  return data_[offset_[k] + idx];
}

TruncatedTensor& TruncatedTensor::operator+=(const TruncatedTensor& o) {
  require_same_shape(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

TruncatedTensor& TruncatedTensor::operator-=(const TruncatedTensor& o) {
  require_same_shape(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

TruncatedTensor& TruncatedTensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

TruncatedTensor TruncatedTensor::dilated(double lambda) const {
  TruncatedTensor r = *this;
  double f = 1.0;
  for (int k = 0; k <= degree_; ++k) {
    for (double& v : r.level(k)) v *= f;
    f *= lambda;
  }
  return r;
}

TruncatedTensor operator+(TruncatedTensor a, const TruncatedTensor& b) { return a += b; }
TruncatedTensor operator-(TruncatedTensor a, const TruncatedTensor& b) { return a -= b; }
TruncatedTensor operator*(double s, TruncatedTensor a) { return a *= s; }

TruncatedTensor tensor_mul(const TruncatedTensor& a, const TruncatedTensor& b) {
  require_same_shape(a, b);
  const int n = a.degree();
  TruncatedTensor r(a.dim(), n);
  for (int k = 0; k <= n; ++k) {
    auto out = r.level(k);
    for (int l = 0; l <= k; ++l) {
      auto x = a.level(k - l);
      auto y = b.level(l);
      // (x (x) y)[i * |y| + j] = x[i] y[j]
      const std::size_t ny = y.size();
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        double* o = out.data() + i * ny;
        for (std::size_t j = 0; j < ny; ++j) o[j] += xi * y[j];
      }
    }
  }
  return r;
}

double max_abs_diff(const TruncatedTensor& a, const TruncatedTensor& b) {
  require_same_shape(a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

GroupElement::GroupElement(TruncatedTensor t) : t_(std::move(t)) {
  if (t_.scalar() != 1.0) throw DomainError("group-like element must have level 0 equal to 1");
}

GroupElement GroupElement::identity(int dim, int degree) {
  return GroupElement(TruncatedTensor::unit(dim, degree));
}

LieElement::LieElement(TruncatedTensor t) : t_(std::move(t)) {
  if (t_.scalar() != 0.0) throw DomainError("Lie element must have level 0 equal to 0");
}

GroupElement operator*(const GroupElement& a, const GroupElement& b) {
  TruncatedTensor r = tensor_mul(a.tensor(), b.tensor());
  r.data()[0] = 1.0;
  return GroupElement(std::move(r));
}

GroupElement group_exp(const LieElement& l) {
  const int n = l.degree();
  TruncatedTensor sum = TruncatedTensor::unit(l.dim(), n);
  TruncatedTensor power = TruncatedTensor::unit(l.dim(), n);
  double fact = 1.0;
  for (int k = 1; k <= n; ++k) {
    power = tensor_mul(power, l.tensor());
    fact *= k;
    sum += (1.0 / fact) * power;
  }
  sum.data()[0] = 1.0;
  return GroupElement(std::move(sum));
}

LieElement group_log(const TruncatedTensor& g) {
  if (g.scalar() != 1.0) throw DomainError("logarithm requires level 0 equal to 1");
  const int n = g.degree();
  TruncatedTensor x = g;
  x.data()[0] = 0.0;
  TruncatedTensor sum(g.dim(), n);
  TruncatedTensor power = TruncatedTensor::unit(g.dim(), n);
  for (int k = 1; k <= n; ++k) {
    power = tensor_mul(power, x);
    sum += ((k % 2 == 1 ? 1.0 : -1.0) / k) * power;
  }
  sum.data()[0] = 0.0;
  return LieElement(std::move(sum));
}

LieElement group_log(const GroupElement& g) { return group_log(g.tensor()); }

GroupElement group_inverse(const GroupElement& g) {
  const int n = g.degree();
  TruncatedTensor one_minus_g = TruncatedTensor::unit(g.dim(), n) - g.tensor();
  TruncatedTensor sum = TruncatedTensor::unit(g.dim(), n);
  TruncatedTensor power = TruncatedTensor::unit(g.dim(), n);
  for (int k = 1; k <= n; ++k) {
    power = tensor_mul(power, one_minus_g);
    sum += power;
  }
  sum.data()[0] = 1.0;
  return GroupElement(std::move(sum));
}

double homogeneous_norm(const GroupElement& g) {
  double m = 0.0;
  for (int k = 1; k <= g.degree(); ++k) {
    double s = 0.0;
    for (double v : g.level(k)) s += v * v;
    m = std::max(m, std::pow(std::sqrt(s), 1.0 / k));
  }
  return m;
}

GroupElement dilate(const GroupElement& g, double lambda) {
  return GroupElement(g.tensor().dilated(lambda));
}

GroupElement segment_signature(const Eigen::Ref<const Eigen::VectorXd>& increment,
                               int degree) {
  const int d = static_cast<int>(increment.size());
  TruncatedTensor t = TruncatedTensor::unit(d, degree);
  for (int i = 0; i < d; ++i) {
    if (!std::isfinite(increment[i])) throw DomainError("non-finite path increment");
  }
  if (degree >= 1) {
    auto l1 = t.level(1);
    for (int i = 0; i < d; ++i) l1[i] = increment[i];
  }
  for (int k = 2; k <= degree; ++k) {
    auto prev = t.level(k - 1);
    auto cur = t.level(k);
    const std::size_t np = prev.size();
    for (std::size_t i = 0; i < np; ++i) {
      for (int j = 0; j < d; ++j) cur[i * d + j] = prev[i] * increment[j] / k;
    }
  }
  return GroupElement(std::move(t));
}

GroupElement pl_signature(std::span<const Eigen::VectorXd> points, int degree) {
  if (points.size() < 2) throw DomainError("pl_signature needs at least two points");
  const Eigen::Index d = points.front().size();
  for (const auto& p : points) {
    if (p.size() != d) throw ShapeError("points must share a dimension");
  }
  GroupElement sig = segment_signature(points[1] - points[0], degree);
  for (std::size_t i = 2; i < points.size(); ++i) {
    sig = sig * segment_signature(points[i] - points[i - 1], degree);
  }
  return sig;
}

TruncatedTensor lie_bracket(const TruncatedTensor& a, const TruncatedTensor& b) {
  return tensor_mul(a, b) - tensor_mul(b, a);
}

TruncatedTensor dynkin_projection(const TruncatedTensor& t) {
  const int d = t.dim();
  const int n = t.degree();
  TruncatedTensor r(d, n);
  std::vector<int> word;
  for (int k = 1; k <= n; ++k) {
    auto src = t.level(k);
    for (std::size_t idx = 0; idx < src.size(); ++idx) {
      const double c = src[idx];
      if (c == 0.0) continue;
      word.assign(k, 0);
      std::size_t rem = idx;
      for (int p = k - 1; p >= 0; --p) {
        word[p] = static_cast<int>(rem % d);
        rem /= d;
      }
      // Left-normed bracket [[e_{w1}, e_{w2}], ..., e_{wk}] as a homogeneous tensor.
      TruncatedTensor acc(d, n);
      std::array<int, 1> first{word[0]};
      acc.coeff(first) = 1.0;
      for (int p = 1; p < k; ++p) {
        TruncatedTensor e(d, n);
        std::array<int, 1> letter{word[p]};
        e.coeff(letter) = 1.0;
        acc = lie_bracket(acc, e);
      }
      auto dst = r.level(k);
      auto br = acc.level(k);
      for (std::size_t q = 0; q < dst.size(); ++q) dst[q] += c * br[q] / k;
    }
  }
  return r;
}

double shuffle_defect(const TruncatedTensor& g) {
  const int d = g.dim();
  const int n = g.degree();
  double scale = 1.0;
  for (double v : g.data()) scale = std::max(scale, std::abs(v));
  double worst = std::abs(g.scalar() - 1.0);
  if (n >= 2) {
    auto g1 = g.level(1);
    auto g2 = g.level(2);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const double lhs = g1[i] * g1[j];
        const double rhs = g2[i * d + j] + g2[j * d + i];
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
  }
  if (n >= 3) {
    auto g1 = g.level(1);
    auto g2 = g.level(2);
    auto g3 = g.level(3);
    auto at3 = [&](int a, int b, int c) { return g3[(a * d + b) * d + c]; };
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
          const double lhs = g1[i] * g2[j * d + k];
          const double rhs = at3(i, j, k) + at3(j, i, k) + at3(j, k, i);
          worst = std::max(worst, std::abs(lhs - rhs));
        }
      }
    }
  }
  return worst / scale;
}

double lie_defect(const TruncatedTensor& t) {
  const int d = t.dim();
  double worst = std::abs(t.scalar());
  if (t.degree() >= 2) {
    auto l2 = t.level(2);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        worst = std::max(worst, std::abs(l2[i * d + j] + l2[j * d + i]));
      }
    }
  }
  TruncatedTensor base = t;
  base.data()[0] = 0.0;
  return std::max(worst, max_abs_diff(dynkin_projection(base), base));
}

nlohmann::json to_json(const TruncatedTensor& t) {
  nlohmann::json levels = nlohmann::json::array();
  for (int k = 0; k <= t.degree(); ++k) {
    auto l = t.level(k);
    levels.push_back(std::vector<double>(l.begin(), l.end()));
  }
  return {{"dim", t.dim()}, {"degree", t.degree()}, {"levels", levels}};
}

TruncatedTensor tensor_from_json(const nlohmann::json& j) {
  return TruncatedTensor::from_levels(j.at("dim").get<int>(), j.at("degree").get<int>(),
                                      j.at("levels").get<std::vector<std::vector<double>>>());
}

}  // namespace roughflow
