#include "roughflow/vector_field.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "roughflow/errors.hpp"
#include "roughflow/numerics.hpp"

namespace roughflow {

VectorFieldModel::VectorFieldModel(int dim, ValueFn value, JetFn jets, std::string name,
                                   std::optional<double> ellipticity)
    : dim_(dim),
      value_(std::move(value)),
      jets_(std::move(jets)),
      name_(std::move(name)),
      ellipticity_(ellipticity) {
  if (dim < 1 || dim > kFieldMaxDim) throw ShapeError("vector fields support dimension 1 to 3");
  if (!value_ || !jets_) throw ConfigError("vector field needs value and jet evaluators");
}

VectorFieldModel VectorFieldModel::constant(const Eigen::MatrixXd& a) {
  const int d = static_cast<int>(a.rows());
  if (a.cols() != a.rows()) throw ShapeError("constant field must be a square matrix");
  std::optional<double> ell;
  if (d >= 1 && d <= kFieldMaxDim) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.transpose() * a, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()[0] > 0.0) ell = es.eigenvalues()[0];
  }
  VectorFieldModel m(
      d,
      [a, d](std::span<const double>, std::span<double> out) {
        for (int i = 0; i < d; ++i)
          for (int c = 0; c < d; ++c) out[i * d + c] = a(c, i);
      },
      [a, d](std::span<const Jet> x, std::span<Jet> out) {
        for (int i = 0; i < d; ++i)
          for (int c = 0; c < d; ++c) out[i * d + c] = Jet(d, x[0].order(), a(c, i));
      },
      a.isIdentity(0.0) ? "identity" : "constant", ell);
  m.constant_ = true;
  m.constant_value_ = a;
  return m;
}

VectorFieldModel VectorFieldModel::linear(std::vector<Eigen::MatrixXd> a) {
  const int d = static_cast<int>(a.size());
  for (const auto& ai : a) {
    if (ai.rows() != d || ai.cols() != d) throw ShapeError("linear field needs d matrices of size d×d");
  }
  auto f = [a, d](auto x, auto out) {
    for (int i = 0; i < d; ++i) {
      for (int c = 0; c < d; ++c) {
        auto acc = 0.0 * x[0];
        for (int k = 0; k < d; ++k) acc += a[i](c, k) * x[k];
        out[i * d + c] = acc;
      }
    }
  };
  return from_generic(d, f, "linear");
}

VectorFieldModel VectorFieldModel::diagonal_linear(const Eigen::VectorXd& a) {
  const int d = static_cast<int>(a.size());
  std::vector<Eigen::MatrixXd> m(d, Eigen::MatrixXd::Zero(d, d));
  for (int i = 0; i < d; ++i) m[i](i, i) = a[i];
  auto model = linear(std::move(m));
  model.name_ = "diagonal_linear";
  return model;
}

VectorFieldModel VectorFieldModel::smooth_elliptic(int dim, double amplitude) {
  const int d = dim;
  const double a = amplitude;
  auto f = [d, a](auto x, auto out) {
    using std::sin;
    for (int i = 0; i < d; ++i)
      for (int c = 0; c < d; ++c)
        out[i * d + c] = (c == i ? 1.0 : 0.0) + a * sin(x[(c + i) % d] + (0.7 * c + 1.3 * i));
  };
  std::optional<double> ell;
  if (a * d < 1.0) ell = (1.0 - a * d) * (1.0 - a * d);
  return from_generic(d, f, "smooth_elliptic", ell);
}

Eigen::MatrixXd VectorFieldModel::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) throw ShapeError("point has the wrong dimension");
  Eigen::MatrixXd out(dim_, dim_);
  value_(std::span<const double>(x.data(), dim_), std::span<double>(out.data(), dim_ * dim_));
  return out;
}

std::vector<Jet> VectorFieldModel::jets(std::span<const double> x, int order) const {
  if (static_cast<int>(x.size()) != dim_) throw ShapeError("point has the wrong dimension");
  std::vector<Jet> xs;
  for (int i = 0; i < dim_; ++i) xs.push_back(Jet::variable(dim_, order, i, x[i]));
  std::vector<Jet> out(dim_ * dim_, Jet(dim_, order));
  jets_(xs, out);
  return out;
}

Eigen::MatrixXd VectorFieldModel::jacobian(int i, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (i < 0 || i >= dim_) throw ShapeError("field index out of range");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(dim_, dim_);
  if (constant_) return j;
  const auto jet = jets(std::span<const double>(x.data(), dim_), 1);
  for (int c = 0; c < dim_; ++c)
    for (int k = 0; k < dim_; ++k) j(c, k) = jet[i * dim_ + c].derivative(k).value();
  return j;
}

namespace {

std::size_t ipow(int b, int e) {
  std::size_t r = 1;
  for (int k = 0; k < e; ++k) r *= static_cast<std::size_t>(b);
  return r;
}

void allocate(WordFields& w) {
  const int d = w.dim;
  w.value.resize(w.degree);
  if (w.with_derivatives) {
    w.jacobian.resize(w.degree);
    w.inverse_generator.resize(w.degree);
  }
  for (int k = 1; k <= w.degree; ++k) {
    const std::size_t n = ipow(d, k);
    w.value[k - 1].assign(n, SmallVec::Zero(d));
    if (w.with_derivatives) {
      w.jacobian[k - 1].assign(n, SmallMat::Zero(d, d));
      w.inverse_generator[k - 1].assign(n, SmallMat::Zero(d, d));
    }
  }
}

}  // namespace

WordFields word_fields(const VectorFieldModel& sigma, std::span<const double> x, int degree,
                       bool with_derivatives) {
  const int d = sigma.dim();
  if (degree < 1) throw ConfigError("word degree must be at least 1");
  const int order = with_derivatives ? degree : degree - 1;
  if (order > kJetMaxOrder) throw ConfigError("word longer than the available derivative order");
  WordFields w;
  w.dim = d;
  w.degree = degree;
  w.with_derivatives = with_derivatives;
  allocate(w);

  if (sigma.is_constant()) {
    std::vector<double> out(d * d);
    sigma.eval_into(x, out);
    for (int i = 0; i < d; ++i)
      for (int c = 0; c < d; ++c) w.value[0][i][c] = out[i * d + c];
    return w;
  }

  const auto base = sigma.jets(x, order);
  // sig[k-1][word][c]: jet of component c of σ_word, of order `order − k + 1`.
  std::vector<std::vector<std::vector<Jet>>> sig(degree);
  sig[0].resize(d);
  for (int i = 0; i < d; ++i) sig[0][i].assign(base.begin() + i * d, base.begin() + (i + 1) * d);
  for (int k = 2; k <= degree; ++k) {
    const std::size_t prev = ipow(d, k - 1);
    sig[k - 1].resize(ipow(d, k));
    for (int i = 0; i < d; ++i) {
      for (std::size_t wj = 0; wj < prev; ++wj) {
        auto& dst = sig[k - 1][i * prev + wj];
        dst.reserve(d);
        for (int c = 0; c < d; ++c) {
          Jet acc = sig[k - 2][wj][c].derivative(0) * sig[0][i][0];
          for (int m = 1; m < d; ++m) acc += sig[k - 2][wj][c].derivative(m) * sig[0][i][m];
          dst.push_back(std::move(acc));
        }
      }
    }
  }
  for (int k = 1; k <= degree; ++k) {
    for (std::size_t wi = 0; wi < sig[k - 1].size(); ++wi) {
      for (int c = 0; c < d; ++c) {
        const Jet& j = sig[k - 1][wi][c];
        w.value[k - 1][wi][c] = j.value();
        if (with_derivatives)
          for (int m = 0; m < d; ++m) w.jacobian[k - 1][wi](c, m) = j.derivative(m).value();
      }
    }
  }
  if (!with_derivatives) return w;

  // Generators of the inverse Jacobian: M_(i) = −Dσ_i, M_(i,J) = DM_J·σ_i + M_i M_J.
  using JetMat = std::vector<Jet>;  // row-major d×d
  std::vector<std::vector<JetMat>> gen(degree);
  gen[0].resize(d);
  for (int i = 0; i < d; ++i) {
    gen[0][i].reserve(d * d);
    for (int c = 0; c < d; ++c)
      for (int m = 0; m < d; ++m) gen[0][i].push_back(-sig[0][i][c].derivative(m));
  }
  for (int k = 2; k <= degree; ++k) {
    const std::size_t prev = ipow(d, k - 1);
    gen[k - 1].resize(ipow(d, k));
    for (int i = 0; i < d; ++i) {
      for (std::size_t wj = 0; wj < prev; ++wj) {
        const JetMat& mj = gen[k - 2][wj];
        const JetMat& mi = gen[0][i];
        JetMat& dst = gen[k - 1][i * prev + wj];
        dst.reserve(d * d);
        for (int c = 0; c < d; ++c) {
          for (int e = 0; e < d; ++e) {
            const Jet& entry = mj[c * d + e];
            Jet acc = entry.derivative(0) * sig[0][i][0];
            for (int m = 1; m < d; ++m) acc += entry.derivative(m) * sig[0][i][m];
            for (int f = 0; f < d; ++f) acc += mi[c * d + f] * mj[f * d + e];
            dst.push_back(std::move(acc));
          }
        }
      }
    }
  }
  for (int k = 1; k <= degree; ++k)
    for (std::size_t wi = 0; wi < gen[k - 1].size(); ++wi)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e)
          w.inverse_generator[k - 1][wi](c, e) = gen[k - 1][wi][c * d + e].value();
  return w;
}

Eigen::VectorXd sigma_operator(const VectorFieldModel& sigma, std::span<const int> word,
                               const Eigen::Ref<const Eigen::VectorXd>& x) {
  const int d = sigma.dim();
  if (word.empty()) throw ConfigError("sigma_operator needs a non-empty word");
  std::size_t idx = 0;
  for (int letter : word) {
    if (letter < 0 || letter >= d) throw ShapeError("word letter out of range");
    idx = idx * d + static_cast<std::size_t>(letter);
  }
  const int k = static_cast<int>(word.size());
  const auto w = word_fields(sigma, std::span<const double>(x.data(), d), k, false);
  return w.value[k - 1][idx];
}

double derivative_check(const VectorFieldModel& sigma, std::size_t probes, std::uint64_t seed,
                        double box, double step) {
  const int d = sigma.dim();
  auto rng = make_stream(seed, 0, "derivative_check");
  std::uniform_real_distribution<double> unif(-box, box);
  double worst = 0.0;
  for (std::size_t p = 0; p < probes; ++p) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = unif(rng);
    for (int i = 0; i < d; ++i) {
      const Eigen::MatrixXd jac = sigma.jacobian(i, x);
      for (int k = 0; k < d; ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp[k] += step;
        xm[k] -= step;
        const Eigen::VectorXd fd = (sigma.eval(xp).col(i) - sigma.eval(xm).col(i)) / (2 * step);
        worst = std::max(worst, (fd - jac.col(k)).cwiseAbs().maxCoeff());
      }
    }
  }
  return worst;
}

double ellipticity_estimate(const VectorFieldModel& sigma, std::size_t probes,
                            std::uint64_t seed, double box) {
  const int d = sigma.dim();
  auto rng = make_stream(seed, 0, "ellipticity");
  std::uniform_real_distribution<double> unif(-box, box);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < probes; ++p) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = unif(rng);
    const Eigen::MatrixXd s = sigma.eval(x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s * s.transpose(), Eigen::EigenvaluesOnly);
    worst = std::min(worst, es.eigenvalues()[0]);
  }
  return worst;
}

}  // namespace roughflow
