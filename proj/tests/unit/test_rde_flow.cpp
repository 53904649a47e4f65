#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/LU>

#include "roughflow/errors.hpp"
#include "roughflow/gaussian_process.hpp"
#include "roughflow/numerics.hpp"
#include "roughflow/rde_flow.hpp"
#include "test_support.hpp"

using namespace roughflow;

namespace {

LiftedPath smooth_path(std::size_t m, int dim, int degree) {
  const auto s = sample_from_function(uniform_times(m, 1.0), dim, [dim](double t) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = 0.8 * std::sin(2 * M_PI * t + i) + 0.3 * t * (i + 1);
    return v;
  });
  return lift_path(s, 0, degree, 1);
}

LiftedPath fbm_path(double h, std::size_t m, int dim, int degree, std::uint64_t seed) {
  const auto s = sample_fbm_grid(CovarianceModel::fbm(h), m, 1, seed, dim);
  return lift_path(s, 0, degree, 1);
}

std::vector<Eigen::VectorXd> probes(int dim, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < n; ++i) out.push_back(testing::random_vector(rng, dim));
  return out;
}

}  // namespace

TEST_CASE("davie_step closed forms") {
  std::mt19937_64 rng(1);
  const auto id = VectorFieldModel::identity(2);
  const auto g = group_exp(testing::random_lie(rng, 2, 3));
  Eigen::VectorXd x(2);
  x << 0.5, -0.2;
  const Eigen::VectorXd y = davie_step(x, g, id);
  CHECK(y[0] == doctest::Approx(x[0] + g.level(1)[0]));
  CHECK(y[1] == doctest::Approx(x[1] + g.level(1)[1]));
  CHECK((davie_step(x, GroupElement::identity(2, 3), VectorFieldModel::smooth_elliptic(2)) - x).norm() == 0.0);

  const auto lin = VectorFieldModel::linear({Eigen::MatrixXd::Constant(1, 1, 1.0)});
  Eigen::VectorXd v(1);
  v << 0.4;
  const double a = 0.3;
  for (int n = 2; n <= 3; ++n) {
    const auto g1 = segment_signature(Eigen::VectorXd::Constant(1, a), n);
    double series = 0.0, term = 1.0;
    for (int k = 0; k <= n; ++k) {
      series += term;
      term *= a / (k + 1);
    }
    CHECK(davie_step(v, g1, lin)[0] == doctest::Approx(0.4 * series).epsilon(1e-14));
  }
}

TEST_CASE("scalar linear RDE converges at second order to exp of the driver") {
  const auto lin = VectorFieldModel::linear({Eigen::MatrixXd::Constant(1, 1, 1.0)});
  std::vector<double> hs, errs;
  for (std::size_t m : {32, 64, 128, 256}) {
    const auto p = smooth_path(m, 1, 2);
    const std::vector<Eigen::VectorXd> x0 = {Eigen::VectorXd::Constant(1, 1.3)};
    const auto sol = solve_flow(lin, p, x0, true);
    const double wt = p.level1(m)[0];
    errs.push_back(std::abs(sol.states[0][m][0] - 1.3 * std::exp(wt)));
    hs.push_back(1.0 / m);
    CHECK(sol.jacobians[0][m](0, 0) == doctest::Approx(sol.states[0][m][0] / 1.3).epsilon(1e-12));
    const auto inv = inverse_jacobian(sol, InverseMethod::direct_rde);
    CHECK(inv[0].back()(0, 0) == doctest::Approx(std::exp(-wt)).epsilon(1e-2));
  }
  const double order = fit_loglog(hs, errs).slope;
  CHECK(order >= 1.7);
  CHECK(order <= 2.3);
}

TEST_CASE("additive noise: flow is a shift and the Jacobian is the identity") {
  const auto id = VectorFieldModel::identity(2);
  const auto p = fbm_path(0.4, 64, 2, 2, 3);
  const auto starts = probes(2, 3, 4);
  const auto sol = solve_flow(id, p, starts, true);
  for (std::size_t s = 0; s < starts.size(); ++s) {
    for (std::size_t k = 0; k <= 64; ++k) {
      CHECK((sol.states[s][k] - starts[s] - p.level1(k)).norm() < 1e-13);
      CHECK(sol.jacobians[s][k].isIdentity(0.0));
    }
  }
  for (auto method : {InverseMethod::direct_rde, InverseMethod::via_psi, InverseMethod::matrix_inverse}) {
    for (const auto& row : inverse_jacobian(sol, method))
      for (const auto& m : row) CHECK(m.isIdentity(0.0));
  }
  const auto back = backward_flow(id, p, starts, false, 16, 48);
  for (std::size_t s = 0; s < starts.size(); ++s) {
    CHECK((back.states[s][0] - (starts[s] - (p.level1(48) - p.level1(16)))).norm() < 1e-13);
  }
  CHECK(residual_order(id, p, starts).slope == std::numeric_limits<double>::infinity());
}

TEST_CASE("decoupled diagonal fields follow per-coordinate closed forms") {
  Eigen::VectorXd a(2);
  a << 0.7, -1.2;
  const auto diag = VectorFieldModel::diagonal_linear(a);
  const auto p = smooth_path(512, 2, 3);
  Eigen::VectorXd x0(2);
  x0 << 1.0, 2.0;
  const auto sol = solve_flow(diag, p, std::vector<Eigen::VectorXd>{x0}, false);
  for (std::size_t k : {128, 256, 512}) {
    const Eigen::VectorXd w = p.level1(k);
    CHECK(sol.states[0][k][0] == doctest::Approx(std::exp(a[0] * w[0])).epsilon(1e-6));
    CHECK(sol.states[0][k][1] == doctest::Approx(2.0 * std::exp(a[1] * w[1])).epsilon(1e-6));
  }
}

TEST_CASE("backward flow of the scalar linear RDE") {
  const auto lin = VectorFieldModel::linear({Eigen::MatrixXd::Constant(1, 1, 1.0)});
  const auto p = fbm_path(0.4, 1024, 1, 3, 9);
  const std::vector<Eigen::VectorXd> x = {Eigen::VectorXd::Constant(1, 0.8)};
  const auto back = backward_flow(lin, p, x, true);
  // Each inverted cell multiplies by the cubic Taylor polynomial of e^{−Δw}.
  double product = 0.8;
  for (std::size_t c = 0; c < 1024; ++c) {
    const double a = -p.increment(c).level(1)[0];
    product *= 1 + a + a * a / 2 + a * a * a / 6;
  }
  CHECK(back.states[0][0][0] == doctest::Approx(product).epsilon(1e-12));
  // the scheme defect per cell is O(Δw⁴), about 4e-3 in total here
  CHECK(back.states[0][0][0] == doctest::Approx(0.8 * std::exp(-p.level1(1024)[0])).epsilon(1e-2));
  const auto fwd = solve_flow(lin, p, std::vector<Eigen::VectorXd>{back.states[0][0]}, false);
  CHECK(fwd.states[0][1024][0] == doctest::Approx(0.8).epsilon(1e-2));
}

TEST_CASE("fbm flow: forward-backward identity, flow property, inverse routes") {
  const auto sigma = VectorFieldModel::smooth_elliptic(2);
  const auto p = fbm_path(0.4, 1024, 2, 3, 21);
  const auto starts = probes(2, 10, 22);
  const auto back = backward_flow(sigma, p, starts, false);
  std::vector<Eigen::VectorXd> pulled;
  for (const auto& row : back.states) pulled.push_back(row[0]);
  const auto fwd = solve_flow(sigma, p, pulled, true);
  double worst = 0.0;
  for (std::size_t s = 0; s < starts.size(); ++s)
    worst = std::max(worst, (fwd.states[s].back() - starts[s]).norm());
  CHECK(worst <= 1e-3);

  // φ_{u,T}(φ_{0,u}(x)) = φ_{0,T}(x) at the midpoint.
  std::vector<Eigen::VectorXd> mid;
  for (const auto& row : fwd.states) mid.push_back(row[512]);
  const auto second = solve_flow(sigma, p, mid, false, 512);
  for (std::size_t s = 0; s < starts.size(); ++s)
    CHECK((second.states[s].back() - fwd.states[s].back()).norm() < 1e-12);

  for (std::size_t s = 0; s < starts.size(); ++s) {
    for (std::size_t k = 0; k <= 1024; k += 64) {
      CHECK((fwd.jacobians[s][k] * fwd.inverse_jacobians[s][k] - Eigen::Matrix2d::Identity()).norm() < 1e-6);
      CHECK(fwd.jacobians[s][k].determinant() > 0.0);
    }
  }

  const auto direct = inverse_jacobian(fwd, InverseMethod::direct_rde, 128);
  const auto psi = inverse_jacobian(fwd, InverseMethod::via_psi, 128);
  const auto mat = inverse_jacobian(fwd, InverseMethod::matrix_inverse, 128);
  double gap = 0.0;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    for (std::size_t j = 0; j < mat[s].size(); ++j) {
      const double scale = mat[s][j].norm();
      gap = std::max({gap, (direct[s][j] - mat[s][j]).norm() / scale,
                      (psi[s][j] - mat[s][j]).norm() / scale,
                      (psi[s][j] - direct[s][j]).norm() / scale});
    }
  }
  CHECK(gap <= 1e-2);
}

TEST_CASE("Davie remainder exponents") {
  const auto sigma = VectorFieldModel::smooth_elliptic(2);
  const auto starts = probes(2, 4, 30);
  const auto rough = residual_order(sigma, fbm_path(0.4, 1024, 2, 2, 31), starts);
  CHECK(rough.slope >= 1.05);
  const auto smooth = residual_order(sigma, smooth_path(512, 2, 2), starts);
  CHECK(smooth.slope >= 2.5);
}

TEST_CASE("flow errors: divergence, shape and degeneracy") {
  const auto blow = VectorFieldModel::from_generic(
      1, [](auto x, auto out) { out[0] = 1e200 * x[0] * x[0]; }, "blowup");
  const auto p = fbm_path(0.4, 64, 1, 2, 40);
  const std::vector<Eigen::VectorXd> x = {Eigen::VectorXd::Constant(1, 1.0)};
  CHECK_THROWS_AS(solve_flow(blow, p, x, false), DivergenceError);
  CHECK_THROWS_AS(solve_flow(VectorFieldModel::identity(2), p, x, false), ShapeError);

  // B = A·1 has eigenvalues −1 ± i, so the step matrix I + B + B²/2 is singular.
  Eigen::MatrixXd a(2, 2);
  a << -1, -1, 1, -1;
  const auto rot = VectorFieldModel::linear({a, Eigen::MatrixXd::Zero(2, 2)});
  std::vector<GroupElement> cells(2, segment_signature(Eigen::Vector2d(1.0, 0.0), 2));
  const LiftedPath lp(uniform_times(2, 1.0), cells, 1);
  const std::vector<Eigen::VectorXd> x2 = {Eigen::Vector2d(1.0, 0.5)};
  const auto sol = solve_flow(rot, lp, x2, true);
  CHECK_THROWS_AS(inverse_jacobian(sol, InverseMethod::matrix_inverse), DegeneracyError);

  const auto single = solve_flow(rot, lp, x2, true, 1, 1);
  CHECK(single.states[0].size() == 1);
  CHECK(single.jacobians[0][0].isIdentity(0.0));
}
