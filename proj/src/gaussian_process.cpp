#include "roughflow/gaussian_process.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "fft_support.hpp"
#include "roughflow/errors.hpp"
#include "roughflow/numerics.hpp"

namespace roughflow {

double fbm_covariance(double s, double t, double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("Hurst index must lie in (0, 1)");
  if (s < 0.0 || t < 0.0) throw DomainError("fbm covariance needs non-negative times");
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

CovarianceModel CovarianceModel::fbm(double hurst, double horizon) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("Hurst index must lie in (0, 1)");
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  CovarianceModel m;
  m.kind_ = CovarianceKind::fbm;
  m.hurst_ = hurst;
  m.horizon_ = horizon;
  m.name_ = "fbm";
  if (hurst == 0.5) {
    m.eval_ = [](double s, double t) { return std::min(s, t); };
  } else {
    m.eval_ = [hurst](double s, double t) { return fbm_covariance(s, t, hurst); };
  }
  return m;
}

CovarianceModel CovarianceModel::custom(Evaluator r, double horizon, std::string name) {
  if (!r) throw ConfigError("custom covariance needs an evaluator");
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  CovarianceModel m;
  m.kind_ = CovarianceKind::custom;
  m.hurst_ = std::numeric_limits<double>::quiet_NaN();
  m.horizon_ = horizon;
  m.name_ = std::move(name);
  m.eval_ = std::move(r);
  return m;
}

double CovarianceModel::rect(double s1, double s2, double t1, double t2) const {
  return eval_(s2, t2) - eval_(s1, t2) - eval_(s2, t1) + eval_(s1, t1);
}

Eigen::MatrixXd CovarianceModel::increment_covariance(std::span<const double> times) const {
  const Eigen::Index m = static_cast<Eigen::Index>(times.size()) - 1;
  if (m < 1) throw DomainError("increment covariance needs at least two nodes");
  Eigen::MatrixXd r(m + 1, m + 1);
  for (Eigen::Index i = 0; i <= m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) r(i, j) = r(j, i) = eval_(times[i], times[j]);
  Eigen::MatrixXd c(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      c(i, j) = r(i + 1, j + 1) - r(i, j + 1) - r(i + 1, j) + r(i, j);
  return c;
}

std::vector<double> uniform_times(std::size_t steps, double horizon) {
  if (steps < 1) throw DomainError("grid needs at least one step");
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = horizon * static_cast<double>(k) / steps;
  return t;
}

Eigen::VectorXd GridPathSample::point(std::size_t sample, std::size_t node) const {
  Eigen::VectorXd p(dim);
  for (int c = 0; c < dim; ++c) p[c] = values.at(sample).at(c).at(node);
  return p;
}

GridPathSample sample_from_function(std::span<const double> times, int dim,
                                    const std::function<Eigen::VectorXd(double)>& w) {
  if (times.size() < 2) throw DomainError("path needs at least two nodes");
  GridPathSample s;
  s.times.assign(times.begin(), times.end());
  s.dim = dim;
  s.values.assign(1, std::vector<std::vector<double>>(dim, std::vector<double>(times.size())));
  const Eigen::VectorXd w0 = w(times[0]);
  if (w0.size() != dim) throw ShapeError("path function returned the wrong dimension");
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Eigen::VectorXd v = w(times[k]) - w0;
    for (int c = 0; c < dim; ++c) s.values[0][c][k] = v[c];
  }
  return s;
}

// Davies–Harte embedding of the stationary increment sequence into a
// circulant of size 2M.
struct GaussianSampler::Circulant {
  std::size_t m = 0;
  std::vector<double> sqrt_eig;  // sqrt(λ_k / 2M)
  detail::ComplexFft fft;
  explicit Circulant(std::size_t steps) : m(steps), fft(2 * steps, FFTW_FORWARD) {}
};

GaussianSampler::GaussianSampler(const CovarianceModel& model, std::size_t steps,
                                 SamplerMethod method)
    : times_(uniform_times(steps, model.horizon())), method_(method) {
  if (steps < 2) throw DomainError("sampler needs at least two steps");
  const Eigen::Index m = static_cast<Eigen::Index>(steps);
  if (method == SamplerMethod::cholesky) {
    Eigen::MatrixXd c(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) c(i, j) = c(j, i) = model(times_[i + 1], times_[j + 1]);
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) {
      jitter_ = 1e-12 * c.trace() / m;
      Eigen::MatrixXd cj = c;
      cj.diagonal().array() += jitter_;
      llt.compute(cj);
      if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
        throw NumericalError("covariance matrix is not positive semi-definite after jitter",
                             es.eigenvalues()[0]);
      }
    }
    chol_ = llt.matrixL();
    return;
  }
  if (model.kind() != CovarianceKind::fbm) {
    throw ConfigError("circulant sampling needs stationary fbm increments");
  }
  circ_ = std::make_unique<Circulant>(steps);
  const double h = model.horizon() / steps;
  const double h2 = 2.0 * model.hurst();
  auto gamma = [&](double k) {
    return 0.5 * std::pow(h, h2) *
           (std::pow(std::abs(k + 1), h2) - 2.0 * std::pow(std::abs(k), h2) +
            std::pow(std::abs(k - 1), h2));
  };
  const std::size_t n2 = 2 * steps;
  std::vector<std::complex<double>> c(n2);
  for (std::size_t k = 0; k <= steps; ++k) c[k] = gamma(static_cast<double>(k));
  for (std::size_t k = 1; k < steps; ++k) c[n2 - k] = c[k];
  circ_->fft.run(c);
  double lmax = 0.0, lmin = std::numeric_limits<double>::infinity();
  for (auto& z : c) {
    lmax = std::max(lmax, z.real());
    lmin = std::min(lmin, z.real());
  }
  if (lmin < -1e-10 * lmax) throw NumericalError("circulant embedding is not non-negative", lmin);
  circ_->sqrt_eig.resize(n2);
  for (std::size_t k = 0; k < n2; ++k)
    circ_->sqrt_eig[k] = std::sqrt(std::max(0.0, c[k].real()) / static_cast<double>(n2));
}

GaussianSampler::~GaussianSampler() = default;

std::vector<double> GaussianSampler::draw(std::uint64_t seed, std::uint64_t index,
                                          int component) const {
  auto rng = make_stream(seed, index, "path/" + std::to_string(component));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t m = times_.size() - 1;
  std::vector<double> out(m + 1, 0.0);
  if (method_ == SamplerMethod::cholesky) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    const Eigen::VectorXd x = chol_.triangularView<Eigen::Lower>() * z;
    for (std::size_t i = 0; i < m; ++i) out[i + 1] = x[static_cast<Eigen::Index>(i)];
    return out;
  }
  const std::size_t n2 = 2 * m;
  std::vector<std::complex<double>> a(n2);
  for (std::size_t k = 0; k < n2; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    a[k] = circ_->sqrt_eig[k] * std::complex<double>(re, im);
  }
  circ_->fft.run(a);
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    acc += a[i].real();
    out[i + 1] = acc;
  }
  return out;
}

GridPathSample GaussianSampler::sample(std::size_t n, std::uint64_t seed, int dim) const {
  if (n < 1) throw DomainError("need at least one sample");
  if (dim < 1) throw DomainError("dimension must be positive");
  GridPathSample s;
  s.times = times_;
  s.dim = dim;
  s.seed = seed;
  s.values.resize(n);
  parallel_for(n, [&](std::size_t i) {
    s.values[i].resize(dim);
    for (int c = 0; c < dim; ++c) s.values[i][c] = draw(seed, i, c);
  });
  return s;
}

GridPathSample sample_fbm_grid(const CovarianceModel& model, std::size_t steps, std::size_t n,
                               std::uint64_t seed, int dim, SamplerMethod method) {
  GaussianSampler sampler(model, steps, method);
  return sampler.sample(n, seed, dim);
}

LiftedPath::LiftedPath(std::vector<double> times, std::vector<GroupElement> increments,
                       int refinement)
    : times_(std::move(times)), increments_(std::move(increments)), refinement_(refinement) {
  if (increments_.empty()) throw ShapeError("lifted path needs at least one cell");
  if (times_.size() != increments_.size() + 1) {
    throw ShapeError("lifted path needs one more node than cells");
  }
  const int d = increments_.front().dim();
  const int n = increments_.front().degree();
  level1_.reserve(times_.size());
  level1_.push_back(Eigen::VectorXd::Zero(d));
  for (const auto& g : increments_) {
    if (g.dim() != d || g.degree() != n) throw ShapeError("lifted path cells differ in shape");
    auto l1 = g.level(1);
    Eigen::VectorXd next = level1_.back();
    for (int i = 0; i < d; ++i) next[i] += l1[i];
    level1_.push_back(std::move(next));
  }
}

GroupElement LiftedPath::w(std::size_t i, std::size_t j) const {
  if (i > j || j >= times_.size()) throw DomainError("w(s,t) needs grid nodes s <= t");
  GroupElement g = GroupElement::identity(dim(), degree());
  for (std::size_t c = i; c < j; ++c) g = g * increments_[c];
  return g;
}

Eigen::VectorXd LiftedPath::level1(std::size_t node) const { return level1_.at(node); }

LiftedPath LiftedPath::coarsen(std::size_t factor) const {
  if (factor < 1 || cells() % factor != 0) {
    throw ConfigError("coarsening factor must divide the number of cells");
  }
  std::vector<double> t;
  std::vector<GroupElement> g;
  for (std::size_t c = 0; c < cells(); c += factor) {
    t.push_back(times_[c]);
    g.push_back(w(c, c + factor));
  }
  t.push_back(times_.back());
  LiftedPath out(std::move(t), std::move(g), refinement_ * static_cast<int>(factor));
  out.covariance_ = covariance_;
  out.seed = seed;
  out.sample_index = sample_index;
  return out;
}

LiftedPath lift_path(const GridPathSample& sample, std::size_t index, int degree,
                     int refinement) {
  if (degree != 2 && degree != 3) throw ConfigError("lift degree must be 2 or 3");
  if (refinement < 1) throw ConfigError("refinement must be at least 1");
  const std::size_t fine = sample.steps();
  const auto r = static_cast<std::size_t>(refinement);
  if (fine == 0 || fine % r != 0) {
    throw ConfigError("sample grid of " + std::to_string(fine) +
                      " cells is not a refinement by " + std::to_string(refinement));
  }
  if (index >= sample.samples()) throw DomainError("sample index out of range");
  const int d = sample.dim;
  const auto& v = sample.values[index];
  std::vector<double> times;
  std::vector<GroupElement> cells;
  cells.reserve(fine / r);
  Eigen::VectorXd inc(d);
  for (std::size_t c = 0; c < fine; c += r) {
    times.push_back(sample.times[c]);
    GroupElement g = GroupElement::identity(d, degree);
    for (std::size_t k = c; k < c + r; ++k) {
      for (int i = 0; i < d; ++i) inc[i] = v[i][k + 1] - v[i][k];
      g = g * segment_signature(inc, degree);
    }
    cells.push_back(std::move(g));
  }
  times.push_back(sample.times.back());
  LiftedPath path(std::move(times), std::move(cells), refinement);
  path.seed = sample.seed;
  path.sample_index = index;
  return path;
}

namespace {

// Cholesky of a symmetric block, adding growing diagonal jitter until it succeeds.
Eigen::LLT<Eigen::MatrixXd> regularized_llt(const Eigen::MatrixXd& a, double& jitter) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  const double scale = a.trace() / std::max<Eigen::Index>(1, a.rows());
  double eps = 1e-12;
  while (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() <= 0.0) {
    if (eps > 1e-4) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
      throw NumericalError("conditioning block is not positive definite", es.eigenvalues()[0]);
    }
    Eigen::MatrixXd aj = a;
    aj.diagonal().array() += eps * scale;
    jitter = std::max(jitter, eps);
    llt.compute(aj);
    eps *= 10.0;
  }
  return llt;
}

}  // namespace

NondeterminismFit nondeterminism_exponent(const CovarianceModel& model, std::size_t steps) {
  if (steps < 8) throw DomainError("non-determinism fit needs at least 8 steps");
  const auto times = uniform_times(steps, model.horizon());
  const Eigen::MatrixXd c = model.increment_covariance(times);
  const Eigen::Index m = c.rows();
  NondeterminismFit fit;
  // Centered intervals of n = 1, 2, 4, ... cells, keeping at least half the grid outside.
  for (Eigen::Index n = 1; 2 * n <= m; n *= 2) {
    const Eigen::Index a = (m - n) / 2;
    std::vector<Eigen::Index> out;
    for (Eigen::Index k = 0; k < m; ++k)
      if (k < a || k >= a + n) out.push_back(k);
    const Eigen::Index o = static_cast<Eigen::Index>(out.size());
    Eigen::MatrixXd coo(o, o);
    Eigen::VectorXd cox = Eigen::VectorXd::Zero(o);
    for (Eigen::Index i = 0; i < o; ++i) {
      for (Eigen::Index j = 0; j < o; ++j) coo(i, j) = c(out[i], out[j]);
      for (Eigen::Index k = a; k < a + n; ++k) cox[i] += c(out[i], k);
    }
    const double vxx = c.block(a, a, n, n).sum();
    const auto llt = regularized_llt(coo, fit.jitter);
    const double explained = cox.dot(llt.solve(cox));
    fit.lengths.push_back(model.horizon() * static_cast<double>(n) / m);
    fit.unconditional_variance.push_back(vxx);
    fit.conditional_variance.push_back(std::max(0.0, vxx - explained));
  }
  for (std::size_t i = 0; i < fit.lengths.size(); ++i) {
    if (!(fit.conditional_variance[i] > 1e-6 * fit.unconditional_variance[i])) {
      fit.compliant = false;
    }
  }
  std::size_t positive = 0;
  for (double v : fit.conditional_variance) positive += v > 0.0 ? 1 : 0;
  if (positive >= 2) {
    const LinearFit lf = fit_loglog(fit.lengths, fit.conditional_variance);
    fit.alpha = lf.slope;
    fit.log_cw = lf.intercept;
    fit.cw = std::exp(lf.intercept);
    fit.cw_lower = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fit.lengths.size(); ++i) {
      fit.cw_lower = std::min(fit.cw_lower,
                              fit.conditional_variance[i] / std::pow(fit.lengths[i], fit.alpha));
    }
  } else {
    fit.alpha = std::numeric_limits<double>::quiet_NaN();
    fit.log_cw = -std::numeric_limits<double>::infinity();
  }
  return fit;
}

namespace {

// (Σ_outer (Σ_inner |□|)^ρ)^{1/ρ} for uniform dyadic partitions of the node list.
double dyadic_variation(const CovarianceModel& model, std::span<const double> nodes, double rho,
                        int outer, int inner) {
  const std::size_t n = nodes.size() - 1;
  auto breaks = [&](int level) {
    std::vector<double> b;
    const std::size_t parts = std::size_t{1} << level;
    for (std::size_t i = 0; i <= parts; ++i) b.push_back(nodes[i * n / parts]);
    return b;
  };
  const auto bo = breaks(outer);
  const auto bi = breaks(inner);
  double total = 0.0;
  for (std::size_t v = 0; v + 1 < bo.size(); ++v) {
    double row = 0.0;
    for (std::size_t u = 0; u + 1 < bi.size(); ++u)
      row += std::abs(model.rect(bi[u], bi[u + 1], bo[v], bo[v + 1]));
    total += std::pow(row, rho);
  }
  return std::pow(total, 1.0 / rho);
}

}  // namespace

double one_rho_variation(const CovarianceModel& model, std::span<const double> grid, double rho,
                         int* outer_level, int* inner_level) {
  if (grid.size() < 2) throw DomainError("variation needs at least two nodes");
  if (!(rho >= 1.0)) throw DomainError("rho must be at least 1");
  int max_level = 0;
  while ((std::size_t{2} << max_level) <= grid.size() - 1) ++max_level;
  int ko = 0, ki = 0;
  double best = dyadic_variation(model, grid, rho, 0, 0);
  for (;;) {
    const int cand[3][2] = {{ko + 1, ki}, {ko, ki + 1}, {ko + 1, ki + 1}};
    int bo = -1, bi = -1;
    double bv = best;
    for (const auto& c : cand) {
      if (c[0] > max_level || c[1] > max_level) continue;
      const double v = dyadic_variation(model, grid, rho, c[0], c[1]);
      if (v > bv * (1.0 + 1e-12)) {
        bv = v;
        bo = c[0];
        bi = c[1];
      }
    }
    if (bo < 0) break;
    best = bv;
    ko = bo;
    ki = bi;
  }
  if (outer_level) *outer_level = ko;
  if (inner_level) *inner_level = ki;
  return best;
}

CovarianceDiagnostics covariance_diagnostics(const CovarianceModel& model,
                                             std::span<const double> grid, std::uint64_t seed,
                                             std::size_t quadruples) {
  if (grid.size() < 16) throw DomainError("covariance diagnostics need at least 16 nodes");
  CovarianceDiagnostics d;
  d.a = grid.front();
  d.b = grid.back();
  const double rho = model.kind() == CovarianceKind::fbm ? model.rho() : 1.0;
  d.sigma2 = model.rect(d.a, d.b, d.a, d.b);
  d.kappa = std::sqrt(one_rho_variation(model, grid, rho, &d.outer_level, &d.inner_level));

  auto rng = make_stream(seed, 0, "quadruples");
  std::uniform_real_distribution<double> unif(d.a, d.b);
  d.quadruples = quadruples;
  for (std::size_t q = 0; q < quadruples; ++q) {
    double t[4] = {unif(rng), unif(rng), unif(rng), unif(rng)};
    std::sort(t, t + 4);
    if (model.rect(t[0], t[1], t[2], t[3]) > 1e-14) ++d.disjoint_violations;
    if (model.rect(t[1], t[2], t[0], t[3]) < -1e-14) ++d.nested_violations;
  }

  // κ over [a, a + (b−a)2^{-k}] with the same number of nodes each time.
  const std::size_t nodes = grid.size();
  for (int k = 0; k < 6; ++k) {
    const double len = (d.b - d.a) * std::ldexp(1.0, -k);
    std::vector<double> sub(nodes);
    for (std::size_t i = 0; i < nodes; ++i) sub[i] = d.a + len * static_cast<double>(i) / (nodes - 1);
    d.kappa_lengths.push_back(len);
    d.kappa_values.push_back(std::sqrt(one_rho_variation(model, sub, rho)));
  }
  d.kappa_exponent = fit_loglog(d.kappa_lengths, d.kappa_values).slope;
  return d;
}

double young_2d_sum(std::span<const double> f_cells, std::span<const double> g_cells,
                    const CovarianceModel& model, std::span<const double> times) {
  const std::size_t m = times.size() - 1;
  if (f_cells.size() != m || g_cells.size() != m) {
    throw ShapeError("young_2d_sum needs one value per grid cell");
  }
  const Eigen::MatrixXd c = model.increment_covariance(times);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (f_cells[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      row += g_cells[j] * c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    total += f_cells[i] * row;
  }
  return total;
}

YoungIntegral young_2d_integral(const std::function<double(double)>& f,
                                const std::function<double(double)>& g,
                                const CovarianceModel& model, std::size_t steps) {
  if (steps < 2 || steps % 2 != 0) throw DomainError("young_2d_integral needs an even step count");
  auto at = [&](std::size_t m) {
    const auto t = uniform_times(m, model.horizon());
    std::vector<double> fc(m), gc(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double mid = 0.5 * (t[i] + t[i + 1]);
      fc[i] = f(mid);
      gc[i] = g(mid);
    }
    return young_2d_sum(fc, gc, model, t);
  };
  YoungIntegral r;
  r.value = at(steps);
  r.error_estimate = std::abs(r.value - at(steps / 2));
  return r;
}

void write_csv(const std::string& path, const GridPathSample& sample, std::size_t index) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << std::setprecision(12);
  out << "t";
  for (int c = 0; c < sample.dim; ++c) out << ",w" << c;
  out << '\n';
  for (std::size_t k = 0; k < sample.times.size(); ++k) {
    out << sample.times[k];
    for (int c = 0; c < sample.dim; ++c) out << ',' << sample.values.at(index)[c][k];
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

nlohmann::json to_json(const LiftedPath& path) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& g : path.increments()) cells.push_back(to_json(g.tensor()));
  return {{"dim", path.dim()},         {"degree", path.degree()},
          {"refinement", path.refinement()}, {"seed", path.seed},
          {"sample", path.sample_index}, {"times", path.times()},
          {"cells", cells}};
}

}  // namespace roughflow
