#include "roughflow/malliavin_checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "roughflow/errors.hpp"
#include "roughflow/numerics.hpp"
#include "roughflow/rde_flow.hpp"

namespace roughflow {
namespace {

std::size_t node_of(const LiftedPath& path, double t) {
  const auto& times = path.times();
  const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12 * std::max(1.0, std::abs(t)));
  if (it == times.end() || std::abs(*it - t) > 1e-12 * std::max(1.0, std::abs(t)))
    throw ConfigError("time " + std::to_string(t) + " is not a grid node");
  return static_cast<std::size_t>(it - times.begin());
}

// Σ_{i,j} Ā_i C_ij Ā_j* with cell values averaged over the cell's endpoints.
Eigen::MatrixXd quadrature(const std::vector<Eigen::MatrixXd>& a, std::span<const double> times,
                           const CovarianceModel& model, std::size_t stride) {
  std::vector<double> sub;
  for (std::size_t k = 0; k < times.size(); k += stride) sub.push_back(times[k]);
  const std::size_t cells = sub.size() - 1;
  std::vector<Eigen::MatrixXd> bar(cells);
  for (std::size_t c = 0; c < cells; ++c) bar[c] = 0.5 * (a[c * stride] + a[(c + 1) * stride]);
  const Eigen::MatrixXd cov = model.increment_covariance(sub);
  const Eigen::Index d = a.front().rows();
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < cells; ++i) {
    Eigen::MatrixXd row = Eigen::MatrixXd::Zero(a.front().rows(), a.front().cols());
    for (std::size_t j = 0; j < cells; ++j)
      row += cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * bar[j];
    gamma += bar[i] * row.transpose();
  }
  return gamma;
}

double relative_change(const Eigen::MatrixXd& fine, const Eigen::MatrixXd& coarse) {
  const double n = fine.norm();
  return n > 0.0 ? (fine - coarse).norm() / n : (fine - coarse).norm();
}

}  // namespace

CovMatrixReport malliavin_covariance(const VectorFieldModel& sigma, const LiftedPath& path,
                                     const Eigen::VectorXd& x, double s, double t,
                                     const MalliavinOptions& options) {
  if (!path.covariance()) throw ConfigError("Malliavin covariance needs the path's covariance model");
  if (x.size() != sigma.dim() || path.dim() != sigma.dim())
    throw ShapeError("start, path and σ differ in dimension");
  if (!(t > s)) throw DomainError("Malliavin covariance needs s < t");
  const std::size_t ns = node_of(path, s), nt = node_of(path, t);
  const std::vector<Eigen::VectorXd> starts{x};
  const FlowSolution sol = solve_flow(sigma, path, starts, true, ns, nt);

  const std::size_t nodes = nt - ns + 1;
  const Eigen::MatrixXd& jt = sol.jacobians[0][nodes - 1];
  std::vector<Eigen::MatrixXd> a(nodes);
  for (std::size_t k = 0; k < nodes; ++k)
    a[k] = jt * sol.inverse_jacobians[0][k] * sigma.eval(sol.states[0][k]);

  const CovarianceModel& model = *path.covariance();
  CovMatrixReport r;
  r.s = s;
  r.t = t;
  r.x = x;
  r.cells = nodes - 1;
  r.hurst = model.hurst();
  r.sigma_name = sigma.name();
  r.path_seed = path.seed;
  r.path_sample = path.sample_index;
  const Eigen::MatrixXd raw = quadrature(a, sol.times, model, 1);
  r.symmetry_error = (raw - raw.transpose()).cwiseAbs().maxCoeff();
  r.gamma = 0.5 * (raw + raw.transpose());
  if (r.cells >= 2 && r.cells % 2 == 0) {
    const Eigen::MatrixXd half = quadrature(a, sol.times, model, 2);
    r.coarse_change = relative_change(r.gamma, half);
    if (r.cells % 4 == 0) {
      const Eigen::MatrixXd quarter = quadrature(a, sol.times, model, 4);
      const double far = (half - quarter).norm(), near = (r.gamma - half).norm();
      if (far > 0.0 && near > 0.0) r.observed_order = std::log2(far / near);
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r.gamma);
  r.eigenvalues = eig.eigenvalues();
  if (r.coarse_change > options.tolerance)
    throw ConvergenceError("Malliavin covariance quadrature did not settle: halving the grid changes γ by " +
                               std::to_string(r.coarse_change),
                           r.observed_order);
  return r;
}

EigenScalingFit lambda_min_scaling(const VectorFieldModel& sigma, const LiftedPath& path,
                                   const Eigen::VectorXd& x, int levels, double s) {
  if (levels < 2) throw ConfigError("eigenvalue scaling needs at least two lengths");
  if (!path.covariance()) throw ConfigError("eigenvalue scaling needs the path's covariance model");
  const double span = path.times().back() - s;
  const double h = path.covariance()->hurst();
  EigenScalingFit f;
  f.min_over_scaled = std::numeric_limits<double>::infinity();
  MalliavinOptions relaxed;
  relaxed.tolerance = std::numeric_limits<double>::infinity();
  for (int k = levels - 1; k >= 0; --k) {
    const double len = std::ldexp(span, -k);
    const auto r = malliavin_covariance(sigma, path, x, s, s + len, relaxed);
    f.lengths.push_back(len);
    f.lambda_min.push_back(r.lambda_min());
    f.reports.push_back(r);
    if (std::isfinite(h)) f.min_over_scaled = std::min(f.min_over_scaled, r.lambda_min() / std::pow(len, 2 * h));
  }
  const LinearFit fit = fit_loglog(f.lengths, f.lambda_min);
  f.exponent = fit.slope;
  f.intercept = fit.intercept;
  for (auto& r : f.reports) r.scaling_exponent = f.exponent;
  return f;
}

SmoothingDecayResult smoothing_decay_experiment(const VectorFieldModel& sigma,
                                                const CovarianceModel& model,
                                                const SmoothingDecayConfig& cfg) {
  if (cfg.beta != 1 && cfg.beta != 2) throw DomainError("smoothing decay supports β ∈ {1, 2}");
  if (!(cfg.frequency > 0.0)) throw DomainError("probe frequency must be positive");
  if (cfg.levels < 1 || cfg.samples < 2 || cfg.min_cells < 1)
    throw ConfigError("smoothing decay needs levels ≥ 1, samples ≥ 2 and min_cells ≥ 1");
  const int d = sigma.dim();
  const double k = cfg.frequency;
  Eigen::VectorXd x = cfg.x;
  if (x.size() == 0) {
    x = Eigen::VectorXd::Zero(d);
    if (cfg.beta == 1) x[0] = std::numbers::pi / (2.0 * k);
  }
  if (x.size() != d) throw ShapeError("start point and σ differ in dimension");
  const double horizon = model.horizon();
  const double hurst = model.hurst();

  SmoothingDecayResult res;
  res.samples = cfg.samples;
  res.hurst = hurst;
  const std::size_t nr = static_cast<std::size_t>(cfg.levels) + 1;
  for (std::size_t i = 0; i < nr; ++i) res.rs.push_back(std::ldexp(horizon, -static_cast<int>(nr - 1 - i)));
  res.start_value = cfg.beta == 1 ? std::abs(k * std::sin(k * x[0])) : std::abs(k * k * std::cos(k * x[0]));

  // J⁻¹ ∂^β f(X) flattened: a vector for β = 1, the matrix J⁻¹ ∂²f J^{−*} for β = 2.
  const std::size_t width = cfg.beta == 1 ? d : d * d;
  auto functional = [&](const Eigen::VectorXd& state, const Eigen::MatrixXd& jinv, double* out) {
    if (cfg.beta == 1) {
      Eigen::Map<Eigen::VectorXd>(out, d) = jinv.col(0) * (-k * std::sin(k * state[0]));
    } else {
      Eigen::Map<Eigen::MatrixXd>(out, d, d) =
          jinv.col(0) * jinv.col(0).transpose() * (-k * k * std::cos(k * state[0]));
    }
  };

  // values[n][i * width + c]
  std::vector<std::vector<double>> values(cfg.samples, std::vector<double>(nr * width));
  if (sigma.is_constant()) {
    const Eigen::MatrixXd a = sigma.constant_value();
    Eigen::MatrixXd cov(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nr));
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nr; ++j) cov(i, j) = model(res.rs[i], res.rs[j]);
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("covariance at the probe times is not positive", 0.0);
    const Eigen::MatrixXd lower = llt.matrixL();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    parallel_for(cfg.samples, [&](std::size_t n) {
      auto rng = make_stream(cfg.seed, n, "smoothing-decay");
      std::normal_distribution<double> g(0.0, 1.0);
      Eigen::MatrixXd z(static_cast<Eigen::Index>(nr), d);
      for (int c = 0; c < d; ++c)
        for (std::size_t i = 0; i < nr; ++i) z(i, c) = g(rng);
      const Eigen::MatrixXd w = lower * z;  // w(i, c) = W^c_{r_i}
      for (std::size_t i = 0; i < nr; ++i) {
        const Eigen::VectorXd state = x + a * w.row(static_cast<Eigen::Index>(i)).transpose();
        functional(state, id, values[n].data() + i * width);
      }
    });
    res.oracle.resize(nr);
    const double a1 = a.row(0).squaredNorm();
    for (std::size_t i = 0; i < nr; ++i) {
      const double damp = std::exp(-0.5 * k * k * a1 * model(res.rs[i], res.rs[i]));
      res.oracle[i] = res.start_value * damp;
    }
  } else {
    const std::size_t steps = cfg.min_cells << cfg.levels;
    const GaussianSampler sampler(model, steps);
    parallel_for(cfg.samples, [&](std::size_t n) {
      GridPathSample s;
      s.times = sampler.times();
      s.dim = d;
      s.seed = cfg.seed;
      s.values.resize(1);
      for (int c = 0; c < d; ++c) s.values[0].push_back(sampler.draw(cfg.seed, n, c));
      const LiftedPath path = lift_path(s, 0, cfg.degree, 1);
      const std::vector<Eigen::VectorXd> starts{x};
      const FlowSolution sol = solve_flow(sigma, path, starts, true);
      for (std::size_t i = 0; i < nr; ++i) {
        const std::size_t node = cfg.min_cells << i;
        functional(sol.states[0][node], sol.inverse_jacobians[0][node], values[n].data() + i * width);
      }
    });
  }

  std::vector<double> column(cfg.samples);
  for (std::size_t i = 0; i < nr; ++i) {
    Eigen::VectorXd mean(static_cast<Eigen::Index>(width));
    double var = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      for (std::size_t n = 0; n < cfg.samples; ++n) column[n] = values[n][i * width + c];
      const SampleMoments m = moments(column);
      mean[static_cast<Eigen::Index>(c)] = m.mean;
      var += m.stderr_mean * m.stderr_mean;
    }
    res.estimates.push_back(mean.norm());
    res.stderrs.push_back(std::sqrt(var));
  }

  // fit on r ≥ k^{−1/H} while the estimate stays above the noise floor
  const double r0 = std::isfinite(hurst) ? std::pow(k, -1.0 / hurst) : 0.0;
  std::size_t first = 0;
  while (first < nr && res.rs[first] < r0 * (1 - 1e-12)) ++first;
  std::size_t last = first;
  while (last < nr && res.estimates[last] >= cfg.noise_sigmas * res.stderrs[last]) ++last;
  res.truncated = last < nr;
  if (last < first + 2) throw ConfigError("fewer than two smoothing-decay points above the noise floor");
  res.fit_first = first;
  res.fit_last = last - 1;
  const std::span<const double> rs(res.rs), est(res.estimates);
  const LinearFit fit = fit_loglog(rs.subspan(first, last - first), est.subspan(first, last - first));
  res.slope = fit.slope;
  res.intercept = fit.intercept;
  return res;
}

nlohmann::json to_json(const CovMatrixReport& r) {
  nlohmann::json gamma = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.gamma.rows(); ++i) {
    std::vector<double> row(r.gamma.cols());
    for (Eigen::Index j = 0; j < r.gamma.cols(); ++j) row[j] = r.gamma(i, j);
    gamma.push_back(row);
  }
  auto nan_safe = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  return {{"s", r.s},
          {"t", r.t},
          {"x", std::vector<double>(r.x.data(), r.x.data() + r.x.size())},
          {"gamma", gamma},
          {"eigenvalues", std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size())},
          {"symmetry_error", r.symmetry_error},
          {"cells", r.cells},
          {"coarse_change", r.coarse_change},
          {"observed_order", nan_safe(r.observed_order)},
          {"scaling_exponent", nan_safe(r.scaling_exponent)},
          {"hurst", nan_safe(r.hurst)},
          {"sigma", r.sigma_name},
          {"path_seed", r.path_seed},
          {"path_sample", r.path_sample}};
}

nlohmann::json to_json(const EigenScalingFit& f) {
  return {{"lengths", f.lengths},
          {"lambda_min", f.lambda_min},
          {"exponent", f.exponent},
          {"intercept", f.intercept},
          {"min_over_scaled", f.min_over_scaled}};
}

nlohmann::json to_json(const SmoothingDecayResult& r) {
  return {{"rs", r.rs},
          {"estimates", r.estimates},
          {"stderrs", r.stderrs},
          {"oracle", r.oracle},
          {"fit_first", r.fit_first},
          {"fit_last", r.fit_last},
          {"truncated", r.truncated},
          {"slope", r.slope},
          {"intercept", r.intercept},
          {"start_value", r.start_value},
          {"samples", r.samples},
          {"hurst", std::isfinite(r.hurst) ? nlohmann::json(r.hurst) : nlohmann::json()}};
}

}  // namespace roughflow
