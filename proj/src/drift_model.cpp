#include "roughflow/drift_model.hpp"

#include <cmath>

#include "roughflow/errors.hpp"
#include "roughflow/numerics.hpp"

namespace roughflow {

std::string to_string(DriftKind kind) {
  switch (kind) {
    case DriftKind::zero: return "zero";
    case DriftKind::constant: return "constant";
    case DriftKind::smooth: return "smooth";
    case DriftKind::linear: return "linear";
    case DriftKind::weierstrass: return "weierstrass";
    case DriftKind::lp_block: return "lp_block";
    case DriftKind::smooth_bump: return "smooth_bump";
    case DriftKind::custom: return "custom";
  }
  return "custom";
}

DriftModel::DriftModel(int dim, Evaluator b, DriftKind kind, std::string name, double kappa,
                       std::optional<double> sup_bound)
    : dim_(dim), b_(std::move(b)), kind_(kind), name_(std::move(name)), kappa_(kappa),
      sup_bound_(sup_bound) {
  if (dim < 1) throw ShapeError("drift dimension must be positive");
  if (!b_) throw ConfigError("drift needs an evaluator");
  if (!(kappa > 0.0)) throw DomainError("drift Hölder exponent must be positive");
}

DriftModel DriftModel::zero(int dim) {
  return DriftModel(
      dim, [](std::span<const double>, std::span<double> out) {
        for (double& v : out) v = 0.0;
      },
      DriftKind::zero, "zero", std::numeric_limits<double>::infinity(), 0.0);
}

DriftModel DriftModel::constant(const Eigen::VectorXd& c) {
  const Eigen::VectorXd v = c;
  return DriftModel(
      static_cast<int>(c.size()),
      [v](std::span<const double>, std::span<double> out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[static_cast<Eigen::Index>(i)];
      },
      DriftKind::constant, "constant", std::numeric_limits<double>::infinity(), v.norm());
}

DriftModel DriftModel::smooth(int dim, double amplitude) {
  const double a = amplitude;
  return DriftModel(
      dim,
      [a, dim](std::span<const double> x, std::span<double> out) {
        for (int c = 0; c < dim; ++c)
          out[c] = a * std::sin(x[(c + 1) % dim] + 0.5 * c) + 0.5 * a * std::cos(x[c]);
      },
      DriftKind::smooth, "smooth", std::numeric_limits<double>::infinity(),
      1.5 * std::abs(a) * std::sqrt(static_cast<double>(dim)));
}

DriftModel DriftModel::linear(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw ShapeError("linear drift needs a square matrix");
  const Eigen::MatrixXd m = a;
  return DriftModel(
      static_cast<int>(a.rows()),
      [m](std::span<const double> x, std::span<double> out) {
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), m.cols());
        Eigen::Map<Eigen::VectorXd>(out.data(), m.rows()) = m * xv;
      },
      DriftKind::linear, "linear");
}

DriftModel DriftModel::sum(const DriftModel& a, const DriftModel& b, double weight) {
  if (a.dim() != b.dim()) throw ShapeError("drifts differ in dimension");
  const int d = a.dim();
  if (d > 8) throw ShapeError("drift sums support dimension up to 8");
  std::optional<double> bound;
  if (a.sup_bound_ && b.sup_bound_) bound = *a.sup_bound_ + std::abs(weight) * *b.sup_bound_;
  return DriftModel(
      d,
      [a, b, weight, d](std::span<const double> x, std::span<double> out) {
        double tmp[8];
        a.b_(x, out);
        b.b_(x, std::span<double>(tmp, static_cast<std::size_t>(d)));
        for (int c = 0; c < d; ++c) out[c] += weight * tmp[c];
      },
      a.kind_, a.name_ + "+" + b.name_, std::min(a.kappa_, b.kappa_), bound);
}

Eigen::VectorXd DriftModel::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) throw ShapeError("drift argument has the wrong dimension");
  Eigen::VectorXd xv = x;
  Eigen::VectorXd out(dim_);
  b_(std::span<const double>(xv.data(), dim_), std::span<double>(out.data(), dim_));
  return out;
}

void DriftModel::validate(std::size_t probes, std::uint64_t seed, double box) const {
  auto rng = make_stream(seed, 0, "drift/validate");
  std::uniform_real_distribution<double> u(-box, box);
  Eigen::VectorXd x(dim_);
  for (std::size_t p = 0; p < probes; ++p) {
    for (int c = 0; c < dim_; ++c) x[c] = u(rng);
    const Eigen::VectorXd v = (*this)(x);
    if (!v.allFinite()) throw DomainError("drift " + name_ + " is not finite on a probe");
    if (sup_bound_ && v.norm() > *sup_bound_ * (1 + 1e-12) + 1e-15)
      throw DomainError("drift " + name_ + " exceeds its sup bound on a probe");
  }
}

}  // namespace roughflow
