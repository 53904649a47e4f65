#include "roughflow/jet.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "roughflow/errors.hpp"

namespace roughflow {
namespace {

struct Layout {
  int vars = 0;
  std::array<std::size_t, kJetMaxOrder + 2> count{};  // monomials of degree ≤ K at count[K]
  std::vector<std::array<int, kJetMaxVars>> exps;
  std::vector<int> degree;
  std::vector<std::array<int, kJetCapacity>> sum;       // index of α + β, −1 above max order
  std::vector<std::array<int, kJetMaxVars>> plus;       // index of α + e_i, −1 above max order

  int find(const std::array<int, kJetMaxVars>& e) const {
    for (std::size_t k = 0; k < exps.size(); ++k)
      if (exps[k] == e) return static_cast<int>(k);
    return -1;
  }
};

Layout build_layout(int vars) {
  Layout l;
  l.vars = vars;
  for (int deg = 0; deg <= kJetMaxOrder; ++deg) {
    for (int a = deg; a >= 0; --a) {
      for (int b = deg - a; b >= 0; --b) {
        const int c = deg - a - b;
        std::array<int, kJetMaxVars> e{a, b, c};
        if ((vars < 2 && b != 0) || (vars < 3 && c != 0)) continue;
        l.exps.push_back(e);
        l.degree.push_back(deg);
      }
    }
    l.count[deg] = l.exps.size();
  }
  const std::size_t n = l.exps.size();
  l.sum.assign(n, {});
  l.plus.assign(n, {});
  for (std::size_t a = 0; a < n; ++a) {
    l.sum[a].fill(-1);
    for (std::size_t b = 0; b < n; ++b) {
      if (l.degree[a] + l.degree[b] > kJetMaxOrder) continue;
      std::array<int, kJetMaxVars> e{};
      for (int i = 0; i < kJetMaxVars; ++i) e[i] = l.exps[a][i] + l.exps[b][i];
      l.sum[a][b] = l.find(e);
    }
    l.plus[a].fill(-1);
    for (int i = 0; i < vars; ++i) {
      if (l.degree[a] + 1 > kJetMaxOrder) continue;
      auto e = l.exps[a];
      ++e[i];
      l.plus[a][i] = l.find(e);
    }
  }
  return l;
}

const Layout& layout(int vars) {
  static const std::array<Layout, kJetMaxVars> all = {build_layout(1), build_layout(2),
                                                      build_layout(3)};
  return all[vars - 1];
}

void check_compatible(const Jet& a, const Jet& b) {
  if (a.vars() != b.vars()) throw ShapeError("jets over different numbers of variables");
}

}  // namespace

Jet::Jet(int vars, int order, double value) : vars_(vars), order_(order) {
  if (vars < 1 || vars > kJetMaxVars) throw ShapeError("jets support 1 to 3 variables");
  if (order < 0 || order > kJetMaxOrder) throw ConfigError("jet order must be in [0, 5]");
  c_[0] = value;
}

Jet Jet::variable(int vars, int order, int i, double value) {
  Jet j(vars, order, value);
  if (i < 0 || i >= vars) throw ShapeError("jet variable index out of range");
  if (order >= 1) j.c_[1 + i] = 1.0;  // degree-1 monomials are e_0, e_1, e_2 in order
  return j;
}

std::size_t Jet::size() const noexcept { return layout(vars_).count[order_]; }

double Jet::coeff(std::span<const int> exponents) const {
  std::array<int, kJetMaxVars> e{};
  int deg = 0;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (static_cast<int>(i) >= vars_) {
      if (exponents[i] != 0) throw ShapeError("exponent for a missing jet variable");
      continue;
    }
    e[i] = exponents[i];
    deg += exponents[i];
  }
  if (deg > order_) throw ConfigError("requested coefficient above the jet order");
  return c_[layout(vars_).find(e)];
}

double Jet::partial(std::span<const int> exponents) const {
  double fact = 1.0;
  for (int a : exponents)
    for (int k = 2; k <= a; ++k) fact *= k;
  return coeff(exponents) * fact;
}

Jet Jet::derivative(int i) const {
  if (order_ == 0) throw ConfigError("cannot differentiate an order-0 jet");
  if (i < 0 || i >= vars_) throw ShapeError("jet variable index out of range");
  const Layout& l = layout(vars_);
  Jet r(vars_, order_ - 1);
  for (std::size_t b = 0; b < l.count[order_ - 1]; ++b) {
    r.c_[b] = (l.exps[b][i] + 1) * c_[l.plus[b][i]];
  }
  return r;
}

Jet Jet::truncated(int order) const {
  if (order > order_) throw ConfigError("cannot raise the order of a jet");
  Jet r(vars_, order);
  const std::size_t n = layout(vars_).count[order];
  for (std::size_t k = 0; k < n; ++k) r.c_[k] = c_[k];
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  check_compatible(*this, o);
  if (o.order_ < order_) *this = truncated(o.order_);
  const std::size_t n = size();
  for (std::size_t k = 0; k < n; ++k) c_[k] += o.c_[k];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_compatible(*this, o);
  if (o.order_ < order_) *this = truncated(o.order_);
  const std::size_t n = size();
  for (std::size_t k = 0; k < n; ++k) c_[k] -= o.c_[k];
  return *this;
}

Jet& Jet::operator*=(const Jet& o) { return *this = *this * o; }

Jet& Jet::operator*=(double s) {
  const std::size_t n = size();
  for (std::size_t k = 0; k < n; ++k) c_[k] *= s;
  return *this;
}

Jet Jet::operator-() const {
  Jet r = *this;
  r *= -1.0;
  return r;
}

Jet operator*(const Jet& a, const Jet& b) {
  check_compatible(a, b);
  const int order = std::min(a.order_, b.order_);
  const Layout& l = layout(a.vars_);
  Jet r(a.vars_, order);
  const std::size_t na = l.count[order];
  for (std::size_t i = 0; i < na; ++i) {
    const double ai = a.c_[i];
    if (ai == 0.0) continue;
    const std::size_t nb = l.count[order - l.degree[i]];
    const auto& row = l.sum[i];
    for (std::size_t j = 0; j < nb; ++j) r.c_[row[j]] += ai * b.c_[j];
  }
  return r;
}

Jet Jet::compose(const std::array<double, kJetMaxOrder + 1>& taylor) const {
  Jet h = *this;
  h.c_[0] = 0.0;
  Jet r(vars_, order_, taylor[0]);
  Jet p = h;
  for (int m = 1; m <= order_; ++m) {
    Jet term = p;
    term *= taylor[m];
    r += term;
    if (m < order_) p = p * h;
  }
  return r;
}

Jet sin(const Jet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  std::array<double, kJetMaxOrder + 1> t{};
  const double cyc[4] = {s, c, -s, -c};
  double fact = 1.0;
  for (int m = 0; m <= kJetMaxOrder; ++m) {
    if (m > 0) fact *= m;
    t[m] = cyc[m % 4] / fact;
  }
  return a.compose(t);
}

Jet cos(const Jet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  std::array<double, kJetMaxOrder + 1> t{};
  const double cyc[4] = {c, -s, -c, s};
  double fact = 1.0;
  for (int m = 0; m <= kJetMaxOrder; ++m) {
    if (m > 0) fact *= m;
    t[m] = cyc[m % 4] / fact;
  }
  return a.compose(t);
}

Jet exp(const Jet& a) {
  const double e = std::exp(a.value());
  std::array<double, kJetMaxOrder + 1> t{};
  double fact = 1.0;
  for (int m = 0; m <= kJetMaxOrder; ++m) {
    if (m > 0) fact *= m;
    t[m] = e / fact;
  }
  return a.compose(t);
}

Jet operator/(double s, const Jet& a) {
  const double x = a.value();
  if (x == 0.0) throw DomainError("jet division by zero");
  std::array<double, kJetMaxOrder + 1> t{};
  double p = s / x;
  for (int m = 0; m <= kJetMaxOrder; ++m) {
    t[m] = p;
    p *= -1.0 / x;
  }
  return a.compose(t);
}

Jet operator/(const Jet& a, const Jet& b) { return a * (1.0 / b); }

Jet tanh(const Jet& a) { return 1.0 - 2.0 / (exp(2.0 * a) + 1.0); }

}  // namespace roughflow
