#include "roughflow/averaged_field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include "roughflow/errors.hpp"
#include "roughflow/numerics.hpp"
#include "roughflow/rde_flow.hpp"

namespace roughflow {
namespace {

void require_uniform(std::span<const double> times) {
  if (times.size() < 2) throw DomainError("field needs at least two time nodes");
  const double dt = times[1] - times[0];
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (std::abs(times[k] - times[k - 1] - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
      throw DomainError("time grid must be uniform");
  }
}

DriftModel cosine_probe(int dim, int j) {
  const double k = std::ldexp(1.0, j);
  return DriftModel(
      dim,
      [k](std::span<const double> x, std::span<double> out) {
        for (double& v : out) v = 0.0;
        out[0] = std::cos(k * x[0]);
      },
      DriftKind::lp_block, "cos(2^" + std::to_string(j) + " x1) e1",
      std::numeric_limits<double>::infinity(), 1.0);
}

GridPathSample single_sample(const GaussianSampler& sampler, std::uint64_t seed, std::size_t index,
                             int dim) {
  GridPathSample s;
  s.times = sampler.times();
  s.dim = dim;
  s.seed = seed;
  s.values.resize(1);
  for (int c = 0; c < dim; ++c) s.values[0].push_back(sampler.draw(seed, index, c));
  return s;
}

// (mean |v|^q)^{1/q} and the standard error of its log.
std::pair<double, double> q_moment(std::span<const double> v, double q) {
  std::vector<double> powers(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) powers[i] = std::pow(std::abs(v[i]), q);
  const SampleMoments m = moments(powers);
  if (!(m.mean > 0.0)) return {0.0, std::numeric_limits<double>::infinity()};
  return {std::pow(m.mean, 1.0 / q), m.stderr_mean / (q * m.mean)};
}

}  // namespace

SpaceGrid SpaceGrid::single(const Eigen::VectorXd& x) {
  SpaceGrid g;
  g.lower = x;
  g.upper = x;
  g.nodes.assign(static_cast<std::size_t>(x.size()), 1);
  return g;
}

SpaceGrid SpaceGrid::box(const Eigen::VectorXd& center, double half_width,
                         std::size_t nodes_per_axis) {
  if (nodes_per_axis < 2) throw DomainError("a box grid needs at least two nodes per axis");
  if (!(half_width > 0.0)) throw DomainError("box half-width must be positive");
  SpaceGrid g;
  g.lower = center.array() - half_width;
  g.upper = center.array() + half_width;
  g.nodes.assign(static_cast<std::size_t>(center.size()), nodes_per_axis);
  return g;
}

std::size_t SpaceGrid::size() const noexcept {
  std::size_t n = 1;
  for (std::size_t k : nodes) n *= k;
  return n;
}

Eigen::VectorXd SpaceGrid::point(std::size_t flat) const {
  Eigen::VectorXd x(dim());
  for (int a = 0; a < dim(); ++a) {
    const std::size_t n = nodes[a];
    const std::size_t i = flat % n;
    flat /= n;
    x[a] = n == 1 ? lower[a] : lower[a] + (upper[a] - lower[a]) * static_cast<double>(i) / (n - 1);
  }
  return x;
}

AveragedFieldGrid AveragedFieldGrid::from_function(
    std::vector<double> times, SpaceGrid space,
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& tb) {
  AveragedFieldGrid f;
  f.times = std::move(times);
  f.space = std::move(space);
  f.values.resize(f.times.size());
  for (std::size_t k = 0; k < f.times.size(); ++k) {
    for (std::size_t j = 0; j < f.space.size(); ++j) f.values[k].push_back(tb(f.times[k], f.space.point(j)));
  }
  f.drift_name = "function";
  return f;
}

Eigen::VectorXd AveragedFieldGrid::at(std::size_t time_node, const Eigen::VectorXd& x) const {
  const int d = dim();
  if (x.size() != d) throw ShapeError("field argument has the wrong dimension");
  const auto& row = values.at(time_node);
  std::array<std::size_t, 8> base{};
  std::array<double, 8> frac{};
  std::array<bool, 8> moving{};
  for (int a = 0; a < d; ++a) {
    const std::size_t n = space.nodes[a];
    moving[a] = n > 1;
    if (!moving[a]) continue;
    const double h = (space.upper[a] - space.lower[a]) / (n - 1);
    const double u = (x[a] - space.lower[a]) / h;
    const double i = std::clamp(std::floor(u), 0.0, static_cast<double>(n - 2));
    base[a] = static_cast<std::size_t>(i);
    frac[a] = u - i;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(row.front().size());
  for (unsigned corner = 0; corner < (1u << d); ++corner) {
    double w = 1.0;
    std::size_t flat = 0, stride = 1;
    bool skip = false;
    for (int a = 0; a < d; ++a) {
      const bool hi = (corner >> a) & 1u;
      if (!moving[a]) {
        if (hi) skip = true;
      } else {
        w *= hi ? frac[a] : 1.0 - frac[a];
        flat += (base[a] + (hi ? 1 : 0)) * stride;
      }
      stride *= space.nodes[a];
    }
    if (!skip && w != 0.0) out += w * row[flat];
  }
  return out;
}

Eigen::VectorXd AveragedFieldGrid::increment(std::size_t s, std::size_t t,
                                             const Eigen::VectorXd& x) const {
  return at(t, x) - at(s, x);
}

AveragedFieldGrid eval_averaged_field(const DriftModel& b, const VectorFieldModel& sigma,
                                      const LiftedPath& path, const SpaceGrid& space,
                                      std::size_t time_stride) {
  const int d = sigma.dim();
  if (b.dim() != d || path.dim() != d || space.dim() != d)
    throw ShapeError("drift, vector field, path and space grid differ in dimension");
  if (time_stride < 1 || path.cells() % time_stride != 0)
    throw ConfigError("time stride must divide the number of path cells");
  std::vector<Eigen::VectorXd> starts;
  for (std::size_t j = 0; j < space.size(); ++j) starts.push_back(space.point(j));
  const FlowSolution sol = solve_flow(sigma, path, starts, true);
  const auto inv = inverse_jacobian(sol, InverseMethod::matrix_inverse);

  AveragedFieldGrid f;
  f.space = space;
  for (std::size_t k = 0; k <= path.cells(); k += time_stride) f.times.push_back(path.time(k));
  f.values.assign(f.times.size(), std::vector<Eigen::VectorXd>(space.size()));
  f.drift_name = b.name();
  f.sigma_name = sigma.name();
  f.degree = path.degree();
  f.seed = path.seed;
  if (const auto& cov = path.covariance(); cov && cov->kind() == CovarianceKind::fbm)
    f.hurst = cov->hurst();

  parallel_for(space.size(), [&](std::size_t j) {
    auto integrand = [&](std::size_t k) -> Eigen::VectorXd { return inv[j][k] * b(sol.states[j][k]); };
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd prev = integrand(0);
    f.values[0][j] = acc;
    for (std::size_t k = 1; k <= path.cells(); ++k) {
      const Eigen::VectorXd cur = integrand(k);
      acc += 0.5 * (path.time(k) - path.time(k - 1)) * (prev + cur);
      prev = cur;
      if (k % time_stride == 0) f.values[k / time_stride][j] = acc;
    }
  });
  return f;
}

double pathwise_time_exponent(const AveragedFieldGrid& field) {
  require_uniform(field.times);
  const std::size_t cells = field.times.size() - 1;
  std::vector<double> lengths, sups;
  for (std::size_t len = 1; 2 * len <= cells; len *= 2) {
    double sup = 0.0;
    for (std::size_t a = 0; a + len <= cells; a += len)
      for (std::size_t j = 0; j < field.space.size(); ++j)
        sup = std::max(sup, (field.values[a + len][j] - field.values[a][j]).norm());
    lengths.push_back(field.times[len] - field.times[0]);
    sups.push_back(sup);
  }
  std::size_t positive = 0;
  for (double s : sups) positive += s > 0.0;
  if (positive < 2) return std::numeric_limits<double>::infinity();
  return fit_loglog(lengths, sups).slope;
}

FrequencyDecayResult frequency_decay_experiment(const VectorFieldModel& sigma,
                                                const CovarianceModel& model,
                                                const FrequencyDecayConfig& cfg) {
  if (cfg.q < 2.0) throw DomainError("frequency decay needs q >= 2");
  if (cfg.js.size() < 2) throw DomainError("frequency decay needs at least two frequencies");
  if (cfg.samples < 2) throw DomainError("frequency decay needs at least two samples");
  const double horizon = model.horizon();
  if (!(0.0 <= cfg.s && cfg.s < cfg.t && cfg.t <= horizon))
    throw DomainError("need 0 <= s < t <= horizon");
  const auto node_of = [&](double time) {
    const double u = time / horizon * static_cast<double>(cfg.steps);
    const double r = std::round(u);
    if (std::abs(u - r) > 1e-9) throw ConfigError("s and t must be grid nodes");
    return static_cast<std::size_t>(r);
  };
  const std::size_t ks = node_of(cfg.s), kt = node_of(cfg.t);
  const int d = sigma.dim();
  const Eigen::VectorXd x = cfg.x.size() == 0 ? Eigen::VectorXd::Zero(d) : cfg.x;
  if (x.size() != d) throw ShapeError("start point has the wrong dimension");

  const GaussianSampler sampler(model, cfg.steps,
                                model.kind() == CovarianceKind::fbm ? SamplerMethod::circulant
                                                                    : SamplerMethod::cholesky);
  const auto& times = sampler.times();
  const std::size_t nj = cfg.js.size();
  std::vector<std::vector<double>> values(nj, std::vector<double>(cfg.samples));

  parallel_for(cfg.samples, [&](std::size_t n) {
    if (sigma.is_constant()) {
      const Eigen::MatrixXd& a = sigma.constant_value();
      std::vector<double> y(kt - ks + 1, x[0]);
      for (int c = 0; c < d; ++c) {
        if (a(0, c) == 0.0) continue;
        const std::vector<double> w = sampler.draw(cfg.seed, n, c);
        for (std::size_t k = ks; k <= kt; ++k) y[k - ks] += a(0, c) * w[k];
      }
      for (std::size_t j = 0; j < nj; ++j) {
        const double freq = std::ldexp(1.0, cfg.js[j]);
        double acc = 0.0, prev = std::cos(freq * y[0]);
        for (std::size_t k = ks + 1; k <= kt; ++k) {
          const double cur = std::cos(freq * y[k - ks]);
          acc += 0.5 * (times[k] - times[k - 1]) * (prev + cur);
          prev = cur;
        }
        values[j][n] = std::abs(acc);
      }
      return;
    }
    const GridPathSample sample = single_sample(sampler, cfg.seed, n, d);
    const LiftedPath path = lift_path(sample, 0, cfg.degree, 1);
    const FlowSolution sol = solve_flow(sigma, path, std::vector<Eigen::VectorXd>{x}, true, 0, kt);
    for (std::size_t j = 0; j < nj; ++j) {
      const double freq = std::ldexp(1.0, cfg.js[j]);
      auto integrand = [&](std::size_t k) -> Eigen::VectorXd {
        return sol.inverse_jacobians[0][k].col(0) * std::cos(freq * sol.states[0][k][0]);
      };
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(d), prev = integrand(ks);
      for (std::size_t k = ks + 1; k <= kt; ++k) {
        const Eigen::VectorXd cur = integrand(k);
        acc += 0.5 * (times[k] - times[k - 1]) * (prev + cur);
        prev = cur;
      }
      values[j][n] = acc.norm();
    }
  });

  FrequencyDecayResult r;
  r.js = cfg.js;
  r.samples = cfg.samples;
  std::vector<double> xs, ys;
  double worst_rel = 0.0;
  for (std::size_t j = 0; j < nj; ++j) {
    const auto [m, se] = q_moment(values[j], cfg.q);
    r.moments.push_back(m);
    r.log_stderr.push_back(se);
    xs.push_back(cfg.js[j] * std::log(2.0));
    ys.push_back(std::log(m));
    worst_rel = std::max(worst_rel, se);
  }
  const LinearFit fit = fit_line(xs, ys);
  r.slope = fit.slope;
  r.intercept = fit.intercept;
  double mean_x = 0.0, sxx = 0.0, mc = 0.0;
  for (double v : xs) mean_x += v / xs.size();
  for (double v : xs) sxx += (v - mean_x) * (v - mean_x);
  for (std::size_t j = 0; j < nj; ++j) mc += std::pow((xs[j] - mean_x) / sxx * r.log_stderr[j], 2);
  mc = std::sqrt(mc);
  r.slope_ci = 1.96 * std::hypot(fit.slope_stderr, mc);
  r.widened = mc > fit.slope_stderr || worst_rel > 0.1;
  return r;
}

TimeRegularityFit time_regularity_estimate(std::span<const AveragedFieldGrid> fields, double q) {
  if (fields.size() < 500) throw DomainError("time regularity needs at least 500 fields");
  const auto& times = fields.front().times;
  if (times.size() < 64) throw DomainError("time regularity needs at least 64 time nodes");
  require_uniform(times);
  for (const auto& f : fields) {
    if (f.times.size() != times.size()) throw ShapeError("fields differ in time grid");
  }
  const std::size_t cells = times.size() - 1;
  TimeRegularityFit fit;
  for (std::size_t len = 1; 2 * len <= cells; len *= 2) {
    std::vector<double> v;
    for (const auto& f : fields)
      for (std::size_t a = 0; a + len <= cells; a += len)
        for (std::size_t j = 0; j < f.space.size(); ++j)
          v.push_back((f.values[a + len][j] - f.values[a][j]).norm());
    fit.pairs += v.size();
    fit.lengths.push_back(times[len] - times[0]);
    fit.moments.push_back(q_moment(v, q).first);
  }
  const LinearFit lf = fit_loglog(fit.lengths, fit.moments);
  fit.nu = lf.slope;
  fit.intercept = lf.intercept;
  fit.exceeds_half = fit.nu > 0.5;
  return fit;
}

TimeRegularityFit time_regularity_experiment(const VectorFieldModel& sigma,
                                             const CovarianceModel& model,
                                             const TimeRegularityConfig& cfg) {
  if (cfg.cells < 2 || cfg.substeps < 1) throw DomainError("need cells >= 2 and substeps >= 1");
  const int d = sigma.dim();
  const Eigen::VectorXd x = cfg.x.size() == 0 ? Eigen::VectorXd::Zero(d) : cfg.x;
  double window = cfg.window;
  CovarianceModel windowed = model;
  if (model.kind() == CovarianceKind::fbm) {
    // the probe decorrelates after about 2^{−j/H}
    if (window <= 0.0) window = static_cast<double>(cfg.cells) * std::pow(2.0, -cfg.j / model.hurst());
    windowed = CovarianceModel::fbm(model.hurst(), window);
  } else if (window > 0.0 && std::abs(window - model.horizon()) > 1e-12) {
    throw ConfigError("a custom covariance fixes the window to its horizon");
  }
  const GaussianSampler sampler(windowed, cfg.cells * cfg.substeps);
  const DriftModel probe = cosine_probe(d, cfg.j);
  const SpaceGrid space = SpaceGrid::single(x);
  std::vector<AveragedFieldGrid> fields(cfg.samples);
  parallel_for(cfg.samples, [&](std::size_t n) {
    LiftedPath path = lift_path(single_sample(sampler, cfg.seed, n, d), 0, cfg.degree, 1);
    path.attach_covariance(windowed);
    fields[n] = eval_averaged_field(probe, sigma, path, space, cfg.substeps);
  });
  return time_regularity_estimate(fields, cfg.q);
}

void write_csv(const std::string& file, const AveragedFieldGrid& field) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot open " + file + " for writing");
  const int d = field.dim();
  out << std::setprecision(12) << "t";
  for (int c = 0; c < d; ++c) out << ",x" << c;
  for (int c = 0; c < d; ++c) out << ",tb" << c;
  out << '\n';
  for (std::size_t k = 0; k < field.times.size(); ++k) {
    for (std::size_t j = 0; j < field.space.size(); ++j) {
      const Eigen::VectorXd x = field.space.point(j);
      out << field.times[k];
      for (int c = 0; c < d; ++c) out << ',' << x[c];
      for (int c = 0; c < d; ++c) out << ',' << field.values[k][j][c];
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + file);
}

nlohmann::json to_json(const FrequencyDecayResult& r) {
  return {{"js", r.js},         {"moments", r.moments},     {"log_stderr", r.log_stderr},
          {"slope", r.slope},   {"intercept", r.intercept}, {"slope_ci", r.slope_ci},
          {"widened", r.widened}, {"samples", r.samples}};
}

nlohmann::json to_json(const TimeRegularityFit& r) {
  return {{"nu", r.nu},           {"intercept", r.intercept}, {"lengths", r.lengths},
          {"moments", r.moments}, {"pairs", r.pairs},         {"exceeds_half", r.exceeds_half}};
}

}  // namespace roughflow
