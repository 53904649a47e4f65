#include "roughflow/function_spaces.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "fft_support.hpp"
#include "roughflow/errors.hpp"
#include "roughflow/numerics.hpp"

namespace roughflow {

namespace {

using cplx = std::complex<double>;

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

double wavenumber(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
}

// In-place transform of a dim-dimensional array with n points per axis.
void fft_nd(std::vector<cplx>& data, int dim, std::size_t n, int sign) {
  const detail::ComplexFft fft(n, sign);
  std::vector<cplx> line(n);
  std::size_t stride = 1;
  for (int axis = 0; axis < dim; ++axis) {
    const std::size_t block = stride * n;
    for (std::size_t base = 0; base < data.size(); base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        for (std::size_t k = 0; k < n; ++k) line[k] = data[base + off + k * stride];
        fft.run(line);
        for (std::size_t k = 0; k < n; ++k) data[base + off + k * stride] = line[k];
      }
    }
    stride = block;
  }
}

std::vector<cplx> forward(const GridFunction& f) {
  std::vector<cplx> z(f.values.begin(), f.values.end());
  fft_nd(z, f.dim, f.nodes, FFTW_FORWARD);
  return z;
}

// Radial wavenumber of every flat index.
std::vector<double> radii(const GridFunction& f) {
  std::vector<double> r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::size_t rest = i;
    double s = 0.0;
    for (int axis = 0; axis < f.dim; ++axis) {
      const double k = wavenumber(rest % f.nodes, f.nodes);
      s += k * k;
      rest /= f.nodes;
    }
    r[i] = std::sqrt(s);
  }
  return r;
}

GridFunction inverse_real(const GridFunction& like, std::vector<cplx> z) {
  fft_nd(z, like.dim, like.nodes, FFTW_BACKWARD);
  GridFunction out{like.dim, like.nodes, like.length, std::vector<double>(z.size())};
  const double scale = 1.0 / static_cast<double>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out.values[i] = z[i].real() * scale;
  return out;
}

void check_block(const GridFunction& f, int j) {
  if (j < -1) throw DomainError("block index below −1");
  if (j > max_block(f)) throw DomainError("block 2^j beyond the grid Nyquist wavenumber");
}

Eigen::VectorXd random_in_box(std::mt19937_64& rng, const HolderProbe& probe) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd x(probe.lower.size());
  for (Eigen::Index c = 0; c < x.size(); ++c)
    x[c] = probe.lower[c] + u(rng) * (probe.upper[c] - probe.lower[c]);
  return x;
}

Eigen::VectorXd random_direction(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd e(d);
  do {
    for (Eigen::Index c = 0; c < d; ++c) e[c] = g(rng);
  } while (e.norm() < 1e-12);
  return e / e.norm();
}

// Flattened central-difference Jacobian.
Eigen::VectorXd jacobian_flat(const VectorFn& f, const Eigen::VectorXd& x, double h) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd probe0 = f(x);
  Eigen::VectorXd out(probe0.size() * d);
  for (Eigen::Index c = 0; c < d; ++c) {
    Eigen::VectorXd xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    out.segment(c * probe0.size(), probe0.size()) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return out;
}

void check_probe(const HolderProbe& probe) {
  if (probe.lower.size() == 0 || probe.lower.size() != probe.upper.size())
    throw ShapeError("probe box bounds differ in dimension");
  if (probe.probes == 0) throw ConfigError("probe count must be positive");
}

double power_weight(double x, double p) { return std::pow(std::abs(x), p); }

void check_uniform(std::span<const double> t, const std::string& what) {
  if (t.size() < 3) throw ShapeError(what + " grid needs at least three nodes");
  const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  if (!(h > 0.0)) throw DomainError(what + " grid must be increasing");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs(t[i] - t[i - 1] - h) > 1e-9 * h) throw ConfigError(what + " grid must be uniform");
}

std::vector<double> trapezoid_weights(std::size_t n, double h) {
  std::vector<double> w(n, h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

// Σ_{i≠j} w_i w_j |f_i − f_j|^p / |t_i − t_j|^{αp+1} on every stride-th node.
double kappa_1d(std::span<const double> t, std::span<const double> f, double alpha, double p,
                std::size_t stride) {
  const std::size_t n = (t.size() - 1) / stride + 1;
  const double h = (t.back() - t.front()) / static_cast<double>(n - 1);
  const auto w = trapezoid_weights(n, h);
  const double q = alpha * p + 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      acc += 2.0 * w[i] * w[j] * power_weight(f[j * stride] - f[i * stride], p) /
             std::pow(t[j * stride] - t[i * stride], q);
  return std::pow(acc, 1.0 / p);
}

double box_increment(const std::vector<std::vector<double>>& v, std::size_t i, std::size_t i2,
                     std::size_t k, std::size_t k2) {
  return v[i][k] - v[i][k2] - v[i2][k] + v[i2][k2];
}

double kappa_rect(std::span<const double> t, std::span<const double> x,
                  const std::vector<std::vector<double>>& v, double a1, double a2, double p,
                  std::size_t stride) {
  const std::size_t nt = (t.size() - 1) / stride + 1, nx = (x.size() - 1) / stride + 1;
  const auto wt = trapezoid_weights(nt, (t.back() - t.front()) / static_cast<double>(nt - 1));
  const auto wx = trapezoid_weights(nx, (x.back() - x.front()) / static_cast<double>(nx - 1));
  const double qt = a1 * p + 1.0, qx = a2 * p + 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t i2 = i + 1; i2 < nt; ++i2) {
      const double dt = std::pow(t[i2 * stride] - t[i * stride], qt);
      for (std::size_t k = 0; k < nx; ++k)
        for (std::size_t k2 = k + 1; k2 < nx; ++k2) {
          const double box = box_increment(v, i * stride, i2 * stride, k * stride, k2 * stride);
          acc += 4.0 * wt[i] * wt[i2] * wx[k] * wx[k2] * power_weight(box, p) /
                 (dt * std::pow(x[k2 * stride] - x[k * stride], qx));
        }
    }
  return std::pow(acc, 1.0 / p);
}

void finish_growth(GrrReport& r, const GrrOptions& options) {
  std::vector<double> n, k;
  for (std::size_t l = 0; l < r.grid_sizes.size(); ++l) {
    if (r.kappa_levels[l] > 0.0) {
      n.push_back(static_cast<double>(r.grid_sizes[l]));
      k.push_back(r.kappa_levels[l]);
    }
  }
  r.growth_exponent = n.size() >= 2 ? fit_loglog(n, k).slope : 0.0;
  r.divergent = r.growth_exponent > options.growth_threshold;
}

std::size_t coarsest_stride(std::size_t cells, const GrrOptions& options) {
  if (options.levels < 1) throw ConfigError("GRR needs at least one level");
  const std::size_t stride = std::size_t{1} << (options.levels - 1);
  if (cells % stride != 0 || cells / stride < 2)
    throw ConfigError("grid cannot be coarsened 2^(levels−1) times");
  return stride;
}

}  // namespace

GridFunction GridFunction::sample(int dim, std::size_t nodes, double length,
                                  const std::function<double(std::span<const double>)>& f) {
  GridFunction g{dim, nodes, length, {}};
  if (dim < 1 || dim > 2) throw ShapeError("grid functions are 1- or 2-dimensional");
  if (!is_power_of_two(nodes)) throw ShapeError("node count must be a power of two");
  std::size_t total = nodes;
  if (dim == 2) total *= nodes;
  g.values.resize(total);
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    for (int a = 0; a < dim; ++a) {
      x[a] = g.spacing() * static_cast<double>(rest % nodes);
      rest /= nodes;
    }
    g.values[i] = f(x);
  }
  g.validate();
  return g;
}

void GridFunction::validate() const {
  if (dim < 1 || dim > 2) throw ShapeError("grid functions are 1- or 2-dimensional");
  if (!is_power_of_two(nodes)) throw ShapeError("node count must be a power of two");
  if (values.size() != (dim == 1 ? nodes : nodes * nodes)) throw ShapeError("grid size mismatch");
  if (!(length > 0.0)) throw DomainError("grid length must be positive");
  for (double v : values)
    if (!std::isfinite(v)) throw DomainError("grid function has non-finite values");
}

double lp_cutoff(double radius) noexcept {
  if (radius <= 0.75) return 1.0;
  if (radius >= 1.0) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (radius - 0.75) / 0.25));
}

double lp_multiplier(int j, double radius) noexcept {
  if (j < 0) return lp_cutoff(radius);
  const double s = std::ldexp(radius, -j);
  return lp_cutoff(0.5 * s) - lp_cutoff(s);
}

int max_block(const GridFunction& f) {
  if (!is_power_of_two(f.nodes)) throw ShapeError("node count must be a power of two");
  int j = 0;
  while ((std::size_t{2} << j) <= f.nodes / 2) ++j;
  return j;
}

GridFunction lp_block(const GridFunction& f, int j) {
  f.validate();
  check_block(f, j);
  auto z = forward(f);
  const auto r = radii(f);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] *= lp_multiplier(j, r[i]);
  return inverse_real(f, std::move(z));
}

std::vector<GridFunction> lp_blocks(const GridFunction& f, int max_j) {
  f.validate();
  check_block(f, max_j);
  const auto z = forward(f);
  const auto r = radii(f);
  std::vector<GridFunction> out;
  for (int j = -1; j <= max_j; ++j) {
    auto zj = z;
    for (std::size_t i = 0; i < zj.size(); ++i) zj[i] *= lp_multiplier(j, r[i]);
    out.push_back(inverse_real(f, std::move(zj)));
  }
  return out;
}

GridFunction spectral_derivative(const GridFunction& f, int axis) {
  f.validate();
  if (axis < 0 || axis >= f.dim) throw ShapeError("derivative axis out of range");
  auto z = forward(f);
  const double unit = 2.0 * std::numbers::pi / f.length;
  std::size_t stride = 1;
  for (int a = 0; a < axis; ++a) stride *= f.nodes;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const std::size_t k = (i / stride) % f.nodes;
    // the Nyquist mode of a real signal has no well-defined derivative
    const double kk = (2 * k == f.nodes) ? 0.0 : wavenumber(k, f.nodes);
    z[i] *= cplx(0.0, unit * kk);
  }
  return inverse_real(f, std::move(z));
}

double lp_norm(const GridFunction& f, double p) {
  if (!(p >= 1.0)) throw DomainError("L^p norm needs p ≥ 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
  }
  double acc = 0.0;
  for (double v : f.values) acc += std::pow(std::abs(v), p);
  return std::pow(acc * std::pow(f.spacing(), f.dim), 1.0 / p);
}

double besov_norm(const GridFunction& f, const BesovParams& params) {
  if (params.max_block < 1) throw ConfigError("Besov norm needs J ≥ 1");
  if (!(params.r >= 1.0)) throw DomainError("Besov norm needs r ≥ 1");
  const auto blocks = lp_blocks(f, params.max_block);
  double acc = 0.0;
  for (int j = -1; j <= params.max_block; ++j) {
    const double term = std::exp2(params.alpha * j) * lp_norm(blocks[j + 1], params.p);
    if (std::isinf(params.r))
      acc = std::max(acc, term);
    else
      acc += std::pow(term, params.r);
  }
  return std::isinf(params.r) ? acc : std::pow(acc, 1.0 / params.r);
}

double grid_holder_seminorm(const GridFunction& f, double alpha) {
  f.validate();
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("grid Hölder seminorm needs α ∈ (0, 1]");
  const std::size_t n = f.nodes;
  double best = 0.0;
  std::size_t stride = 1;
  for (int axis = 0; axis < f.dim; ++axis) {
    for (std::size_t shift = 1; shift <= n / 2; ++shift) {
      const double denom = std::pow(f.spacing() * static_cast<double>(shift), alpha);
      for (std::size_t i = 0; i < f.size(); ++i) {
        const std::size_t k = (i / stride) % n;
        const std::size_t i2 = i + (((k + shift) % n) - k) * stride;
        best = std::max(best, std::abs(f.values[i2] - f.values[i]) / denom);
      }
    }
    stride *= n;
  }
  return best;
}

BlockSpectrum block_spectrum(const GridFunction& f, int max_j) {
  BlockSpectrum s;
  const auto blocks = lp_blocks(f, max_j);
  for (int j = -1; j <= max_j; ++j) {
    s.blocks.push_back(j);
    s.sup_norms.push_back(lp_norm(blocks[j + 1], std::numeric_limits<double>::infinity()));
    s.l2_norms.push_back(lp_norm(blocks[j + 1], 2.0));
  }
  return s;
}

Weight unit_weight() {
  return [](double) { return 1.0; };
}

Weight linear_weight() {
  return [](double r) { return 1.0 + r; };
}

WeightedHolderReport weighted_holder_norm(const VectorFn& f, double alpha,
                                          const std::vector<Weight>& weights,
                                          const HolderProbe& probe) {
  check_probe(probe);
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("weighted Hölder norm needs α ∈ (0, 2]");
  WeightedHolderReport r;
  r.derivative_order = static_cast<int>(std::ceil(alpha)) - 1;
  const int m = r.derivative_order;
  const double frac = alpha - m;
  auto weight = [&](int k, double x) {
    return k < static_cast<int>(weights.size()) && weights[k] ? weights[k](x) : 1.0;
  };
  auto derivative = [&](int k, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return k == 0 ? f(x) : jacobian_flat(f, x, probe.fd_step);
  };

  auto rng = make_stream(probe.seed, 0, "weighted-holder");
  std::vector<double> sup(static_cast<std::size_t>(m + 1), 0.0);
  Eigen::VectorXd prev;
  Eigen::VectorXd prev_d;
  for (std::size_t n = 0; n < probe.probes; ++n) {
    const Eigen::VectorXd x = random_in_box(rng, probe);
    for (int k = 0; k <= m; ++k)
      sup[k] = std::max(sup[k], derivative(k, x).norm() / weight(k, x.norm()));
    const Eigen::VectorXd dx = derivative(m, x);
    auto quotient = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& dy) {
      const double dist = (x - y).norm();
      if (dist <= 0.0) return;
      const double q = (dx - dy).norm() / (std::pow(dist, frac) * weight(m, x.norm() + y.norm()));
      r.quotient_part = std::max(r.quotient_part, q);
    };
    for (double h : probe.scales) {
      const Eigen::VectorXd y = x + h * random_direction(rng, x.size());
      quotient(y, derivative(m, y));
    }
    if (n > 0) quotient(prev, prev_d);
    prev = x;
    prev_d = dx;
  }
  for (double s : sup) r.sup_part += s;
  r.value = r.sup_part + r.quotient_part;
  return r;
}

HolderScan holder_exponent_scan(const VectorFn& f, const HolderProbe& probe) {
  check_probe(probe);
  if (probe.scales.size() < 2) throw ConfigError("Hölder scan needs at least two scales");
  HolderScan s;
  s.scales = probe.scales;
  s.oscillation.assign(s.scales.size(), 0.0);
  auto rng = make_stream(probe.seed, 0, "holder-scan");
  const Eigen::Index d = probe.lower.size();
  for (std::size_t n = 0; n < probe.probes; ++n) {
    const Eigen::VectorXd x = random_in_box(rng, probe);
    const Eigen::VectorXd fx = f(x);
    const Eigen::VectorXd e = random_direction(rng, d);
    for (std::size_t i = 0; i < s.scales.size(); ++i) {
      const double h = s.scales[i];
      double osc = (f(x + h * e) - fx).norm();
      for (Eigen::Index c = 0; c < d; ++c) {
        Eigen::VectorXd y = x;
        y[c] += h;
        osc = std::max(osc, (f(y) - fx).norm());
      }
      s.oscillation[i] = std::max(s.oscillation[i], osc);
    }
  }
  s.exponent = fit_loglog(s.scales, s.oscillation).slope;
  return s;
}

DriftModel synth_drift(DriftKind kind, double kappa, std::uint64_t seed,
                       const SynthDriftOptions& o) {
  if (o.dim < 1) throw ShapeError("drift dimension must be positive");
  const int d = o.dim;
  const double a = o.amplitude;
  auto rng = make_stream(seed, 0, "synth-drift");
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  switch (kind) {
    case DriftKind::weierstrass: {
      if (!(kappa > 0.0)) throw DomainError("weierstrass drift needs κ > 0");
      if (o.levels < 0) throw ConfigError("weierstrass drift needs J ≥ 0");
      const int levels = o.levels;
      std::vector<double> ph(static_cast<std::size_t>((levels + 1) * d));
      for (double& v : ph) v = phase(rng);
      std::vector<double> amp(static_cast<std::size_t>(levels + 1));
      double total = 0.0;
      for (int j = 0; j <= levels; ++j) total += amp[j] = a * std::exp2(-kappa * j);
      const double omega = o.omega;
      return DriftModel(
          d,
          [=](std::span<const double> x, std::span<double> out) {
            for (int c = 0; c < d; ++c) {
              double v = 0.0;
              for (int j = 0; j <= levels; ++j)
                v += amp[j] * std::cos(std::ldexp(omega * x[c], j) + ph[j * d + c]);
              out[c] = v;
            }
          },
          kind, "weierstrass", kappa, std::abs(total) * sqrt_d);
    }
    case DriftKind::lp_block: {
      if (o.block < 0) throw ConfigError("lp_block drift needs a block index ≥ 0");
      std::vector<double> ph(static_cast<std::size_t>(d));
      for (double& v : ph) v = phase(rng);
      const double freq = std::ldexp(o.omega, o.block);
      return DriftModel(
          d,
          [=](std::span<const double> x, std::span<double> out) {
            for (int c = 0; c < d; ++c) out[c] = a * std::cos(freq * x[c] + ph[c]);
          },
          kind, "lp_block", std::numeric_limits<double>::infinity(), std::abs(a) * sqrt_d);
    }
    case DriftKind::smooth_bump: {
      if (!(o.radius > 0.0)) throw DomainError("smooth bump needs a positive radius");
      Eigen::VectorXd v = random_direction(rng, d);
      const double rho = o.radius;
      return DriftModel(
          d,
          [=](std::span<const double> x, std::span<double> out) {
            double s2 = 0.0;
            for (int c = 0; c < d; ++c) s2 += x[c] * x[c];
            s2 /= rho * rho;
            const double bump = s2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s2)) : 0.0;
            for (int c = 0; c < d; ++c) out[c] = a * bump * v[c];
          },
          kind, "smooth_bump", std::numeric_limits<double>::infinity(), std::abs(a));
    }
    default:
      throw ConfigError("synth_drift supports weierstrass, lp_block and smooth_bump");
  }
}

double smooth_bump_lipschitz(double amplitude, double radius) {
  if (!(radius > 0.0)) throw DomainError("smooth bump needs a positive radius");
  const double u = 1.0 / std::sqrt(3.0);  // s² at the extremum of ψ'
  const double s = std::sqrt(u);
  return std::abs(amplitude) / radius * 2.0 * s / ((1.0 - u) * (1.0 - u)) *
         std::exp(1.0 - 1.0 / (1.0 - u));
}

double grr_constant(double alpha, double p) {
  if (!(p >= 1.0) || !(alpha * p > 1.0)) throw DomainError("GRR needs p ≥ 1 and αp > 1");
  return 8.0 * std::pow(4.0, 1.0 / p) * (alpha * p + 1.0) / (alpha * p - 1.0);
}

GrrReport grr_bound(std::span<const double> times, std::span<const double> values, double alpha,
                    double p, const GrrOptions& options) {
  GrrReport r;
  r.alpha = alpha;
  r.p = p;
  r.constant = grr_constant(alpha, p);
  if (times.size() != values.size()) throw ShapeError("GRR times and values differ in length");
  check_uniform(times, "GRR time");
  for (double v : values)
    if (!std::isfinite(v)) throw DomainError("GRR values must be finite");
  const std::size_t cells = times.size() - 1;
  for (std::size_t stride = coarsest_stride(cells, options); stride >= 1; stride /= 2) {
    r.grid_sizes.push_back(cells / stride);
    r.kappa_levels.push_back(kappa_1d(times, values, alpha, p, stride));
  }
  r.kappa = r.kappa_levels.back();
  const double e = alpha - 1.0 / p;
  for (std::size_t i = 0; i < times.size(); ++i)
    for (std::size_t j = i + 1; j < times.size(); ++j) {
      const double inc = std::abs(values[j] - values[i]);
      const double scale = r.kappa * std::pow(times[j] - times[i], e);
      ++r.pairs;
      if (inc > r.constant * scale * (1.0 + 1e-12) + 1e-300) ++r.violations;
      if (scale > 0.0) r.max_ratio = std::max(r.max_ratio, inc / scale);
    }
  finish_growth(r, options);
  return r;
}

GrrReport grr_bound_rect(std::span<const double> times, std::span<const double> space,
                         const std::vector<std::vector<double>>& values, double alpha_time,
                         double alpha_space, double p, const GrrOptions& options) {
  GrrReport r;
  r.alpha = alpha_time;
  r.p = p;
  r.constant = grr_constant(alpha_time, p) * grr_constant(alpha_space, p);
  check_uniform(times, "GRR time");
  check_uniform(space, "GRR space");
  if (values.size() != times.size()) throw ShapeError("GRR field has the wrong number of times");
  for (const auto& row : values) {
    if (row.size() != space.size()) throw ShapeError("GRR field row has the wrong length");
    for (double v : row)
      if (!std::isfinite(v)) throw DomainError("GRR values must be finite");
  }
  const std::size_t ct = times.size() - 1, cx = space.size() - 1;
  const std::size_t coarse = coarsest_stride(std::min(ct, cx), options);
  if (ct % coarse != 0 || cx % coarse != 0) throw ConfigError("grid cannot be coarsened 2^(levels−1) times");
  for (std::size_t stride = coarse; stride >= 1; stride /= 2) {
    r.grid_sizes.push_back(ct / stride);
    r.kappa_levels.push_back(kappa_rect(times, space, values, alpha_time, alpha_space, p, stride));
  }
  r.kappa = r.kappa_levels.back();
  const double et = alpha_time - 1.0 / p, ex = alpha_space - 1.0 / p;
  for (std::size_t i = 0; i < times.size(); ++i)
    for (std::size_t i2 = i + 1; i2 < times.size(); ++i2)
      for (std::size_t k = 0; k < space.size(); ++k)
        for (std::size_t k2 = k + 1; k2 < space.size(); ++k2) {
          const double inc = std::abs(box_increment(values, i, i2, k, k2));
          const double scale = r.kappa * std::pow(times[i2] - times[i], et) *
                               std::pow(space[k2] - space[k], ex);
          ++r.pairs;
          if (inc > r.constant * scale * (1.0 + 1e-12) + 1e-300) ++r.violations;
          if (scale > 0.0) r.max_ratio = std::max(r.max_ratio, inc / scale);
        }
  finish_growth(r, options);
  return r;
}

void write_csv(const std::string& file, const GridFunction& f) {
  f.validate();
  std::ofstream out(file);
  if (!out) throw IoError("cannot open " + file + " for writing");
  out << std::setprecision(12);
  for (int a = 0; a < f.dim; ++a) out << (a ? "," : "") << 'x' << a;
  out << ",value\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::size_t rest = i;
    for (int a = 0; a < f.dim; ++a) {
      out << (a ? "," : "") << f.spacing() * static_cast<double>(rest % f.nodes);
      rest /= f.nodes;
    }
    out << ',' << f.values[i] << '\n';
  }
  if (!out) throw IoError("failed writing " + file);
}

nlohmann::json to_json(const BlockSpectrum& s) {
  return {{"blocks", s.blocks}, {"sup_norms", s.sup_norms}, {"l2_norms", s.l2_norms}};
}

nlohmann::json to_json(const GrrReport& r) {
  return {{"alpha", r.alpha},
          {"p", r.p},
          {"kappa", r.kappa},
          {"constant", r.constant},
          {"pairs", r.pairs},
          {"violations", r.violations},
          {"max_ratio", r.max_ratio},
          {"grid_sizes", r.grid_sizes},
          {"kappa_levels", r.kappa_levels},
          {"growth_exponent", r.growth_exponent},
          {"divergent", r.divergent}};
}

}  // namespace roughflow
