#include <doctest.h>

#include <cmath>
#include <random>

#include "roughflow/drift_solver.hpp"
#include "roughflow/errors.hpp"
#include "roughflow/numerics.hpp"
#include "roughflow/rde_flow.hpp"

using namespace roughflow;

namespace {

Eigen::VectorXd smooth_driver(double t, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = 0.8 * std::sin(2 * M_PI * t + i) + 0.3 * t * (i + 1);
  return v;
}

LiftedPath smooth_path(std::size_t m, int dim, int degree) {
  const auto s = sample_from_function(uniform_times(m, 1.0), dim,
                                      [dim](double t) { return smooth_driver(t, dim); });
  return lift_path(s, 0, degree, 1);
}

LiftedPath fbm_path(double h, std::size_t m, int dim, int degree, std::uint64_t seed) {
  return lift_path(sample_fbm_grid(CovarianceModel::fbm(h), m, 1, seed, dim), 0, degree, 1);
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("direct solver: driftless reduction and constant drift with additive noise") {
  const auto sigma = VectorFieldModel::smooth_elliptic(2);
  const auto p = fbm_path(0.4, 128, 2, 2, 1);
  const Eigen::VectorXd x0 = vec({0.3, -0.5});
  const auto r = solve_direct(DriftModel::zero(2), sigma, p, x0);
  const auto flow = solve_flow(sigma, p, std::vector<Eigen::VectorXd>{x0}, false);
  for (std::size_t k = 0; k <= 128; ++k) CHECK((r.x[k] - flow.states[0][k]).norm() == 0.0);

  const Eigen::VectorXd c = vec({0.7, -1.1});
  const auto id = VectorFieldModel::identity(2);
  const auto rc = solve_direct(DriftModel::constant(c), id, p, x0);
  for (std::size_t k = 0; k <= 128; ++k)
    CHECK((rc.x[k] - (x0 + c * p.time(k) + p.level1(k))).norm() < 1e-12);
}

TEST_CASE("direct solver with additive smooth forcing converges at first order") {
  // x' = b(x) + w'(t), integrated by RK4 on a much finer grid as the oracle
  const auto b = DriftModel::smooth(1, 0.8);
  const auto id = VectorFieldModel::identity(1);
  const Eigen::VectorXd x0 = vec({0.2});
  auto rhs = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const double h = 1e-6;
    return b(x) + (smooth_driver(t + h, 1) - smooth_driver(t - h, 1)) / (2 * h);
  };
  Eigen::VectorXd y = x0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / n, h = 1.0 / n;
    const Eigen::VectorXd k1 = rhs(t, y), k2 = rhs(t + h / 2, y + h / 2 * k1),
                          k3 = rhs(t + h / 2, y + h / 2 * k2), k4 = rhs(t + h, y + h * k3);
    y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  std::vector<double> hs, errs;
  for (std::size_t m : {64, 128, 256, 512}) {
    const auto r = solve_direct(b, id, smooth_path(m, 1, 2), x0);
    hs.push_back(1.0 / m);
    errs.push_back((r.x.back() - y).norm());
  }
  const double order = fit_loglog(hs, errs).slope;
  CHECK(order >= 0.8);
  CHECK(order <= 1.2);
}

TEST_CASE("flow transform: trivial drift and the additive oracle") {
  const auto sigma = VectorFieldModel::smooth_elliptic(2);
  const auto p = fbm_path(0.4, 64, 2, 2, 2);
  const Eigen::VectorXd x0 = vec({0.1, 0.4});
  const auto r = solve_flow_transform(DriftModel::zero(2), sigma, p, x0);
  const auto flow = solve_flow(sigma, p, std::vector<Eigen::VectorXd>{x0}, false);
  for (std::size_t k = 0; k <= 64; ++k) {
    CHECK((r.z[k] - x0).norm() == 0.0);
    CHECK((r.x[k] - flow.states[0][k]).norm() < 1e-14);
  }
  CHECK(r.reconstruction_residual < 1e-14);

  // σ = Id: z' = b(z + w_t)
  const auto b = DriftModel::smooth(2);
  const auto id = VectorFieldModel::identity(2);
  const auto ra = solve_flow_transform(b, id, p, x0);
  Eigen::VectorXd z = x0;
  for (std::size_t k = 0; k < 64; ++k) {
    CHECK((ra.z[k] - z).norm() < 1e-13);
    CHECK((ra.x[k] - (z + p.level1(k))).norm() < 1e-13);
    z += (p.time(k + 1) - p.time(k)) * b(z + p.level1(k));
  }
  // the direct scheme coincides with the transform in the additive case
  CHECK(sup_distance(ra, solve_direct(b, id, p, x0)) < 1e-12);
}

TEST_CASE("direct and flow-transform solutions approach each other under refinement") {
  const auto sigma = VectorFieldModel::smooth_elliptic(2);
  const auto b = DriftModel::smooth(2);
  const auto fine = fbm_path(0.4, 512, 2, 2, 3);
  const Eigen::VectorXd x0 = vec({0.5, -0.2});
  std::vector<double> hs, gaps;
  for (std::size_t f : {8, 4, 2, 1}) {
    const auto p = fine.coarsen(f);
    const auto direct = solve_direct(b, sigma, p, x0);
    const auto ft = solve_flow_transform(b, sigma, p, x0);
    CHECK(ft.reconstruction_residual < 1e-12);
    hs.push_back(1.0 / p.cells());
    gaps.push_back(sup_distance(direct, ft));
  }
  CHECK(fit_loglog(hs, gaps).slope >= 0.5);

  const auto p = fine.coarsen(4);
  const auto heun = solve_flow_transform(b, sigma, p, x0, TimeStepper::heun);
  const auto euler = solve_flow_transform(b, sigma, p, x0, TimeStepper::euler);
  CHECK(heun.stepper == TimeStepper::heun);
  CHECK(sup_distance(heun, euler) < 0.05);
}

TEST_CASE("sewing: Riemann germs, null germs and non-convergence") {
  const std::vector<double> grid = uniform_times(8, 2.0);
  const auto riemann = sewing_integrate(
      [](double s, double t) { return Eigen::VectorXd::Constant(1, std::cos(s) * (t - s)); }, grid);
  for (std::size_t k = 0; k < grid.size(); ++k)
    CHECK(riemann.values[k][0] == doctest::Approx(std::sin(grid[k])).epsilon(1e-7));
  CHECK(std::abs(riemann.additivity_exponent - (2.0)) <= 0.1);

  const auto null = sewing_integrate(
      [](double s, double t) { return Eigen::VectorXd::Constant(1, (t - s) * (t - s)); }, grid);
  for (const auto& v : null.values) CHECK(std::abs(v[0]) < 1e-9);

  // additivity in the germ
  const auto both = sewing_integrate(
      [](double s, double t) {
        return Eigen::VectorXd::Constant(1, std::cos(s) * (t - s) + (t - s) * (t - s));
      },
      grid);
  for (std::size_t k = 0; k < grid.size(); ++k)
    CHECK(both.values[k][0] == doctest::Approx(riemann.values[k][0] + null.values[k][0]).epsilon(1e-7));

  SewingOptions shallow;
  shallow.max_depth = 8;
  try {
    sewing_integrate([](double s, double t) { return Eigen::VectorXd::Constant(1, std::sqrt(t - s)); },
                     grid, shallow);
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(std::abs(e.exponent() - (0.5)) <= 0.01);
  }
}

TEST_CASE("sewing the averaged-field germ along a known curve recovers the quadrature") {
  // Tb_t(x) = ∫_0^t sin(x + r) dr = cos x − cos(x + t), θ_r = r²
  auto tb = [](double t, double x) { return std::cos(x) - std::cos(x + t); };
  const std::vector<double> grid = uniform_times(4, 1.0);
  const auto res = sewing_integrate(
      [&](double s, double t) { return Eigen::VectorXd::Constant(1, tb(t, s * s) - tb(s, s * s)); },
      grid);
  // Simpson oracle for ∫_0^T sin(r² + r) dr
  auto simpson = [](double a, double b) {
    const int n = 20000;
    const double h = (b - a) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double r = a + i * h, f = std::sin(r * r + r);
      acc += (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2)) * f;
    }
    return acc * h / 3;
  };
  for (std::size_t k = 1; k < grid.size(); ++k)
    CHECK(res.values[k][0] == doctest::Approx(simpson(0.0, grid[k])).epsilon(1e-7));
}

TEST_CASE("nonlinear Young equation: constant, linear and additive fields") {
  const auto times = uniform_times(1000, 1.0);
  const SpaceGrid line = SpaceGrid::box(vec({0.0}), 3.0, 7);
  const auto constant = AveragedFieldGrid::from_function(
      times, line, [](double t, const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, 0.6 * t); });
  const auto rc = nly_solve(constant, vec({0.4}));
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(rc.theta[k][0] == doctest::Approx(0.4 + 0.6 * times[k]).epsilon(1e-12));
  CHECK(rc.nu == doctest::Approx(1.0).epsilon(1e-9));

  const auto linear = AveragedFieldGrid::from_function(
      times, line, [](double t, const Eigen::VectorXd& x) { return Eigen::VectorXd(t * x); });
  const auto rl = nly_solve(linear, vec({0.5}));
  CHECK(rl.theta.back()[0] == doctest::Approx(0.5 * std::exp(1.0)).epsilon(1e-3));
  CHECK(rl.residual < 1e-12);

  const auto rough = AveragedFieldGrid::from_function(
      times, line, [](double t, const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, std::sqrt(t)); });
  CHECK_THROWS_AS(nly_solve(rough, vec({0.0})), ConvergenceError);

  // additive smooth case: θ agrees with the transformed solution z
  const auto b = DriftModel::smooth(1, 0.8);
  const auto id = VectorFieldModel::identity(1);
  const auto p = fbm_path(0.4, 256, 1, 2, 5);
  const auto field = eval_averaged_field(b, id, p, SpaceGrid::box(vec({0.0}), 4.0, 401));
  const auto theta = nly_solve(field, vec({0.3}));
  const auto z = solve_flow_transform(b, id, p, vec({0.3})).z;
  double gap = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) gap = std::max(gap, (theta.theta[k] - z[k]).norm());
  CHECK(gap < 2e-2);
}

TEST_CASE("stability gap: zero, Grönwall-linear in δ and linear response in ε") {
  const auto sigma = VectorFieldModel::smooth_elliptic(1);
  const auto b = DriftModel::smooth(1, 0.8);
  const auto p = fbm_path(0.4, 128, 1, 2, 6);
  const Eigen::VectorXd x = vec({0.2});
  const auto same = stability_gap(b, b, x, x, sigma, p);
  CHECK(same.gap == 0.0);
  CHECK(same.k_emp == 0.0);

  std::vector<double> ks;
  for (double delta : {1e-3, 1e-4, 1e-5}) {
    const auto r = stability_gap(b, b, x, x + vec({delta}), sigma, p);
    CHECK(r.field_gap == 0.0);
    CHECK(std::isfinite(r.k_emp));
    ks.push_back(r.k_emp);
  }
  CHECK(std::abs(ks[0] / ks[2] - (1.0)) <= 0.01);
  CHECK(std::abs(ks[1] / ks[2] - (1.0)) <= 0.01);

  std::vector<double> eps, gaps;
  const auto bump = DriftModel::smooth(1, 1.0);
  for (double e : {1e-2, 1e-3, 1e-4}) {
    const auto r = stability_gap(b, DriftModel::sum(b, bump, e), x, x, sigma, p);
    CHECK(r.field_gap > 0.0);
    eps.push_back(e);
    gaps.push_back(r.gap);
  }
  CHECK(std::abs(fit_loglog(eps, gaps).slope - (1.0)) <= 0.05);
}

TEST_CASE("drift solver errors") {
  const auto p = fbm_path(0.4, 16, 1, 2, 7);
  const auto id = VectorFieldModel::identity(1);
  CHECK_THROWS_AS(solve_direct(DriftModel::smooth(2), id, p, vec({0.0})), ShapeError);
  const DriftModel blow(
      1, [](std::span<const double> x, std::span<double> out) { out[0] = 1e200 * x[0] * x[0]; },
      DriftKind::custom, "blowup");
  CHECK_THROWS_AS(solve_direct(blow, id, p, vec({1.0})), DivergenceError);

  Eigen::MatrixXd a(2, 2);
  a << -1, -1, 1, -1;
  const auto rot = VectorFieldModel::linear({a, Eigen::MatrixXd::Zero(2, 2)});
  std::vector<GroupElement> cells(2, segment_signature(Eigen::Vector2d(1.0, 0.0), 2));
  const LiftedPath lp(uniform_times(2, 1.0), cells, 1);
  CHECK_THROWS_AS(solve_flow_transform(DriftModel::smooth(2), rot, lp, vec({1.0, 0.5})), DegeneracyError);

  CHECK_NOTHROW(DriftModel::smooth(3).validate(100, 1));
  const DriftModel liar(
      1, [](std::span<const double>, std::span<double> out) { out[0] = 5.0; }, DriftKind::custom,
      "liar", 1.0, 1.0);
  CHECK_THROWS_AS(liar.validate(10, 1), DomainError);
}
