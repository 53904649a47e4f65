#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "roughflow/errors.hpp"
#include "roughflow/function_spaces.hpp"
#include "roughflow/gaussian_process.hpp"

using namespace roughflow;

namespace {

constexpr double pi = std::numbers::pi;

GridFunction cosine(int dim, std::size_t nodes, int j0) {
  return GridFunction::sample(dim, nodes, 1.0, [j0](std::span<const double> x) {
    return std::cos(std::ldexp(2 * pi * x[0], j0) + 0.3);
  });
}

double sup_diff(const GridFunction& a, const GridFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

// Random trigonometric polynomial with wavenumbers below Nyquist.
GridFunction band_limited(int dim, std::size_t nodes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> k(0, static_cast<int>(nodes / 2) - 1);
  std::vector<std::array<double, 4>> modes;
  for (int m = 0; m < 40; ++m) modes.push_back({double(k(rng)), double(k(rng)), g(rng), g(rng)});
  return GridFunction::sample(dim, nodes, 2.0, [&](std::span<const double> x) {
    double v = 0.0;
    for (const auto& md : modes) {
      const double arg = pi * (md[0] * x[0] + (dim == 2 ? md[1] * x[1] : 0.0));
      v += md[2] * std::cos(arg) + md[3] * std::sin(arg);
    }
    return v;
  });
}

GridFunction from_drift(const DriftModel& b, std::size_t nodes, double omega) {
  return GridFunction::sample(1, nodes, 2 * pi / omega, [&](std::span<const double> x) {
    return b(Eigen::VectorXd::Constant(1, x[0]))[0];
  });
}

}  // namespace

TEST_CASE("partition of unity and multiplier supports") {
  CHECK(lp_cutoff(0.75) == 1.0);
  CHECK(lp_cutoff(1.0) == 0.0);
  for (double r = 0.0; r < 5000.0; r += 0.37) {
    double s = 0.0;
    for (int j = -1; j <= 14; ++j) s += lp_multiplier(j, r);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  }
  for (int j = 0; j <= 6; ++j) {
    CHECK(lp_multiplier(j, 0.74 * std::ldexp(1.0, j)) == 0.0);
    CHECK(lp_multiplier(j, 2.01 * std::ldexp(1.0, j)) == 0.0);
    CHECK(lp_multiplier(j, std::ldexp(1.0, j)) == 1.0);
  }
}

TEST_CASE("blocks of a pure dyadic cosine") {
  for (int dim : {1, 2}) {
    const std::size_t nodes = dim == 1 ? 1024 : 64;
    for (int j0 : {1, 3, 5}) {
      const auto f = cosine(dim, nodes, j0);
      CHECK(sup_diff(lp_block(f, j0), f) <= 1e-8);
      for (int j = -1; j <= max_block(f); ++j)
        if (std::abs(j - j0) >= 2) CHECK(lp_norm(lp_block(f, j), INFINITY) <= 1e-8);
    }
  }
  CHECK(max_block(cosine(1, 1024, 1)) == 9);
  CHECK_THROWS_AS(lp_block(cosine(1, 1024, 1), 10), DomainError);
  CHECK_THROWS_AS(lp_block(cosine(1, 1024, 1), -2), DomainError);
}

TEST_CASE("blocks reconstruct band-limited functions") {
  for (int dim : {1, 2}) {
    const auto f = band_limited(dim, dim == 1 ? 512 : 64, 7 + dim);
    const auto blocks = lp_blocks(f, max_block(f));
    GridFunction sum = f;
    for (double& v : sum.values) v = 0.0;
    for (const auto& b : blocks)
      for (std::size_t i = 0; i < sum.size(); ++i) sum.values[i] += b.values[i];
    CHECK(sup_diff(sum, f) <= 1e-8);
    CHECK(sup_diff(lp_block(f, 2), blocks[3]) <= 1e-12);
  }
}

TEST_CASE("Bernstein ratios are stable across blocks") {
  const auto f = band_limited(1, 1024, 3);
  const double unit = 2 * pi / f.length;
  double lo = INFINITY, hi = 0.0;
  for (int j = 1; j <= 8; ++j) {
    const auto b = lp_block(f, j);
    const double ratio = lp_norm(spectral_derivative(b, 0), INFINITY) /
                         (std::ldexp(unit, j) * lp_norm(b, INFINITY));
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  MESSAGE("Bernstein ratios in [" << lo << ", " << hi << "]");
  // the annulus [3/4, 2] caps the ratio at 2 in one dimension
  CHECK(hi <= 2.0);
  CHECK(lo >= 0.3);
  // exact derivative of a single mode
  const auto c = cosine(1, 256, 2);
  const auto dc = spectral_derivative(c, 0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double x = c.spacing() * static_cast<double>(i);
    CHECK(dc.values[i] == doctest::Approx(-8 * pi * std::sin(8 * pi * x + 0.3)).epsilon(1e-10));
  }
}

TEST_CASE("Besov norms") {
  const auto zero = GridFunction::sample(1, 256, 1.0, [](std::span<const double>) { return 0.0; });
  CHECK(besov_norm(zero, {0.5, INFINITY, INFINITY, 6}) == 0.0);
  for (double alpha : {0.3, 0.7, 1.5}) {
    const auto c = cosine(1, 1024, 4);
    CHECK(besov_norm(c, {alpha, INFINITY, INFINITY, 8}) ==
          doctest::Approx(std::exp2(4 * alpha) * lp_norm(c, INFINITY)).epsilon(1e-8));
  }
  // L^2 of cos on the unit torus is 1/√2; finite r sums a single block
  CHECK(besov_norm(cosine(1, 1024, 3), {0.5, 2.0, 1.0, 8}) ==
        doctest::Approx(std::exp2(1.5) / std::sqrt(2.0)).epsilon(1e-8));

  // Weierstrass drift: B^κ bounded, B^{κ+0.2} growing with J; grid sup norms of
  // sampled cosines fall below 1 while their L^2 norms are exactly √(L/2)
  SynthDriftOptions o;
  o.levels = 10;
  const auto w = synth_drift(DriftKind::weierstrass, 0.5, 4, o);
  const auto f = from_drift(w, 4096, o.omega);
  std::vector<double> at_kappa, above;
  for (int big_j : {4, 6, 8, 10}) {
    at_kappa.push_back(besov_norm(f, {0.5, INFINITY, INFINITY, big_j}));
    above.push_back(besov_norm(f, {0.7, 2.0, INFINITY, big_j}));
  }
  for (double v : at_kappa) CHECK(v <= 1.0 + 1e-8);
  for (std::size_t i = 0; i < above.size(); ++i)
    CHECK(above[i] == doctest::Approx(std::exp2(0.2 * (4 + 2 * i)) * std::sqrt(pi)).epsilon(1e-8));

  // monotone in α; comparable to the grid Hölder seminorm plus sup norm
  CHECK(besov_norm(f, {0.3, INFINITY, INFINITY, 10}) <= besov_norm(f, {0.4, INFINITY, INFINITY, 10}));
  for (double kappa : {0.3, 0.5, 0.8}) {
    const auto g = from_drift(synth_drift(DriftKind::weierstrass, kappa, 9, o), 4096, o.omega);
    const double ratio = besov_norm(g, {kappa, INFINITY, INFINITY, 10}) /
                         (grid_holder_seminorm(g, kappa) + lp_norm(g, INFINITY));
    MESSAGE("κ = " << kappa << ": Besov / Hölder = " << ratio);
    CHECK(ratio > 0.05);
    CHECK(ratio < 1.0);
  }
}

TEST_CASE("weighted Hölder norms") {
  HolderProbe probe;
  probe.lower = Eigen::VectorXd::Constant(1, -10.0);
  probe.upper = Eigen::VectorXd::Constant(1, 10.0);
  probe.probes = 500;
  const VectorFn constant = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, -2.5); };
  for (double alpha : {0.2, 0.5, 0.9}) {
    const auto r = weighted_holder_norm(constant, alpha, {unit_weight()}, probe);
    CHECK(r.value == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(r.derivative_order == 0);
  }

  const VectorFn identity = [](const Eigen::VectorXd& x) { return x; };
  std::vector<double> weighted, unweighted;
  for (double box : {10.0, 100.0, 1000.0}) {
    probe.lower[0] = -box;
    probe.upper[0] = box;
    weighted.push_back(weighted_holder_norm(identity, 0.5, {linear_weight()}, probe).value);
    unweighted.push_back(weighted_holder_norm(identity, 0.5, {unit_weight()}, probe).value);
  }
  CHECK(weighted[2] < 2.0);
  CHECK(weighted[2] / weighted[0] < 1.2);
  CHECK(unweighted[2] / unweighted[0] > 50.0);

  // α ∈ (1, 2] uses the Jacobian and its Hölder quotient
  const VectorFn sine = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, std::sin(x[0])); };
  probe.lower[0] = -pi;
  probe.upper[0] = pi;
  const auto smooth = weighted_holder_norm(sine, 2.0, {}, probe);
  CHECK(smooth.derivative_order == 1);
  CHECK(smooth.sup_part == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(smooth.quotient_part <= 1.0 + 1e-6);

  // Weierstrass: refining the pair scales leaves α < κ bounded and blows up α > κ
  SynthDriftOptions o;
  o.levels = 16;
  const auto w = synth_drift(DriftKind::weierstrass, 0.5, 2, o);
  const VectorFn wf = [&](const Eigen::VectorXd& x) { return w(x); };
  probe.lower[0] = 0.0;
  probe.upper[0] = 2 * pi;
  probe.probes = 4000;
  auto quotient = [&](double alpha, double finest) {
    HolderProbe p = probe;
    p.scales.clear();
    for (double h = 0.5; h >= finest; h /= 2) p.scales.push_back(h);
    return weighted_holder_norm(wf, alpha, {}, p).quotient_part;
  };
  const double below = quotient(0.3, 1e-4) / quotient(0.3, 1e-2);
  const double over = quotient(0.7, 1e-4) / quotient(0.7, 1e-2);
  MESSAGE("quotient growth, α = 0.3: " << below << ", α = 0.7: " << over);
  CHECK(below < 1.3);
  CHECK(over > 2.0);
  CHECK_THROWS_AS(weighted_holder_norm(wf, 2.5, {}, probe), DomainError);
}

TEST_CASE("synthetic drifts") {
  SynthDriftOptions o;
  o.dim = 2;
  for (double kappa : {0.3, 0.5, 0.7}) {
    o.levels = 16;
    const auto w = synth_drift(DriftKind::weierstrass, kappa, 5, o);
    CHECK(w.kappa() == kappa);
    CHECK(w.dim() == 2);
    w.validate(500, 1);
    HolderProbe probe;
    probe.lower = Eigen::VectorXd::Zero(2);
    probe.upper = Eigen::VectorXd::Constant(2, 2 * pi);
    probe.probes = 1000;
    probe.scales.clear();
    for (int l = 3; l <= 12; ++l) probe.scales.push_back(std::ldexp(1.0, -l));
    const auto scan = holder_exponent_scan([&](const Eigen::VectorXd& x) { return w(x); }, probe);
    MESSAGE("κ = " << kappa << ": scanned exponent " << scan.exponent);
    CHECK(std::abs(scan.exponent - kappa) <= 0.1);
  }
  CHECK_THROWS_AS(synth_drift(DriftKind::weierstrass, 0.0, 1), DomainError);
  CHECK_THROWS_AS(synth_drift(DriftKind::linear, 0.5, 1), ConfigError);

  // the same seed gives the same field
  const auto a = synth_drift(DriftKind::weierstrass, 0.5, 3, o);
  const auto b = synth_drift(DriftKind::weierstrass, 0.5, 3, o);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(2, 0.1, 0.7);
  CHECK((a(x) - b(x)).norm() == 0.0);

  // one active block
  SynthDriftOptions one;
  one.block = 4;
  const auto blk = from_drift(synth_drift(DriftKind::lp_block, 1.0, 6, one), 1024, one.omega);
  const auto spectrum = block_spectrum(blk, max_block(blk));
  for (std::size_t i = 0; i < spectrum.blocks.size(); ++i) {
    if (spectrum.blocks[i] == 4)
      CHECK(spectrum.sup_norms[i] == doctest::Approx(lp_norm(blk, INFINITY)).epsilon(1e-8));
    else
      CHECK(spectrum.sup_norms[i] <= 1e-8);
  }

  // bump: Lipschitz constant along its direction equals the analytic bound
  SynthDriftOptions bo;
  bo.dim = 2;
  bo.radius = 0.8;
  bo.amplitude = 1.7;
  const auto bump = synth_drift(DriftKind::smooth_bump, 1.0, 8, bo);
  const double lip = smooth_bump_lipschitz(1.7, 0.8);
  double measured = 0.0;
  const double h = 1e-6;
  for (double r = 0.0; r < 1.0; r += 1e-4) {
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(2, r / std::sqrt(2.0));
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(2, (r + h) / std::sqrt(2.0));
    measured = std::max(measured, (bump(y) - bump(x)).norm() / h);
  }
  CHECK(measured == doctest::Approx(lip).epsilon(1e-4));
  CHECK(bump(Eigen::VectorXd::Constant(2, 0.6)).norm() == 0.0);
  CHECK(bump(Eigen::VectorXd::Zero(2)).norm() == doctest::Approx(1.7));
}

TEST_CASE("GRR bounds on constant, Lipschitz and fBm paths") {
  const auto t = uniform_times(512, 1.0);
  std::vector<double> flat(t.size(), 3.0), lip(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) lip[i] = std::sin(3 * t[i]);
  const auto c = grr_bound(t, flat, 1.0, 4.0);
  CHECK(c.kappa == 0.0);
  CHECK(c.violations == 0);
  CHECK_FALSE(c.divergent);
  const auto l = grr_bound(t, lip, 1.0, 4.0);
  CHECK(l.violations == 0);
  CHECK(l.pairs == 513 * 512 / 2);
  CHECK_FALSE(l.divergent);
  CHECK(grr_constant(1.0, 4.0) == doctest::Approx(8 * std::pow(4.0, 0.25) * 5.0 / 3.0));

  const auto path = sample_fbm_grid(CovarianceModel::fbm(0.4), 1024, 3, 17);
  for (std::size_t n = 0; n < path.samples(); ++n) {
    const auto& v = path.values[n][0];
    const auto at = grr_bound(path.times, v, 0.4, 16.0);
    const auto above = grr_bound(path.times, v, 0.6, 16.0);
    MESSAGE("growth at α = H: " << at.growth_exponent << ", α = H + 0.2: " << above.growth_exponent
                                << "; empirical constant " << at.max_ratio);
    CHECK(at.violations == 0);
    // at α = H the growth is only logarithmic; 0.2 more regularity adds M^{0.2}
    CHECK(above.divergent);
    CHECK(above.growth_exponent - at.growth_exponent >= 0.1);
    CHECK(above.growth_exponent - at.growth_exponent <= 0.3);
  }
  CHECK_THROWS_AS(grr_bound(t, lip, 0.2, 4.0), DomainError);
  CHECK_THROWS_AS(grr_bound(uniform_times(6, 1.0), std::vector<double>(7, 0.0), 1.0, 4.0),
                  ConfigError);
}

TEST_CASE("rectangular GRR") {
  const auto t = uniform_times(16, 1.0);
  const auto x = uniform_times(16, 2.0);
  std::vector<std::vector<double>> product(t.size(), std::vector<double>(x.size()));
  std::vector<std::vector<double>> separable = product;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t k = 0; k < x.size(); ++k) {
      product[i][k] = std::sin(2 * t[i]) * std::cos(x[k]);
      separable[i][k] = t[i] * t[i] + std::sin(x[k]);
    }
  const auto s = grr_bound_rect(t, x, separable, 1.0, 1.0, 4.0, {2});
  CHECK(s.kappa < 1e-12);
  const auto r = grr_bound_rect(t, x, product, 0.8, 0.8, 4.0, {2});
  CHECK(r.kappa > 0.0);
  CHECK(r.violations == 0);
  CHECK_FALSE(r.divergent);
  CHECK_THROWS_AS(grr_bound_rect(t, x, product, 1.0, 0.2, 4.0), DomainError);
}
