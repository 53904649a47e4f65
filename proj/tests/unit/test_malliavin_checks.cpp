#include <doctest.h>

#include <cmath>
#include <numbers>

#include "roughflow/errors.hpp"
#include "roughflow/malliavin_checks.hpp"

using namespace roughflow;

namespace {

LiftedPath fbm_path(double h, std::size_t m, int dim, std::uint64_t seed, std::size_t index = 0) {
  auto p = lift_path(sample_fbm_grid(CovarianceModel::fbm(h), m, index + 1, seed, dim), index, 2, 1);
  p.attach_covariance(CovarianceModel::fbm(h));
  return p;
}

}  // namespace

TEST_CASE("σ = Id: γ is the increment variance times the identity") {
  for (double h : {0.35, 0.4, 0.5}) {
    const auto p = fbm_path(h, 256, 2, 3);
    const auto id = VectorFieldModel::identity(2);
    for (auto [s, t] : {std::pair{0.0, 1.0}, std::pair{0.25, 0.5}, std::pair{0.5, 0.5078125}}) {
      const auto r = malliavin_covariance(id, p, Eigen::VectorXd::Constant(2, 0.3), s, t);
      const double expect = std::pow(t - s, 2 * h);
      CHECK(std::abs(r.gamma(0, 0) / expect - 1) < 1e-10);
      CHECK(std::abs(r.gamma(1, 1) / expect - 1) < 1e-10);
      CHECK(std::abs(r.gamma(0, 1)) < 1e-12 * expect);
      CHECK(r.symmetry_error < 1e-12);
      CHECK(r.lambda_min() > 0.0);
      CHECK(r.hurst == h);
    }
  }
}

TEST_CASE("constant non-identity σ: γ = A A* (t − s)^{2H}") {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.4, -0.3, 0.8;
  const auto p = fbm_path(0.4, 128, 2, 5);
  const auto r = malliavin_covariance(VectorFieldModel::constant(a), p, Eigen::VectorXd::Zero(2), 0.25, 0.75);
  const Eigen::MatrixXd expect = a * a.transpose() * std::pow(0.5, 0.8);
  CHECK((r.gamma - expect).norm() < 1e-12);
}

TEST_CASE("elliptic σ: symmetric, positive, λ_min scales like (t − s)^{2H}") {
  const auto sigma = VectorFieldModel::smooth_elliptic(2);
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto p = fbm_path(0.4, 1024, 2, seed);
    const auto r = malliavin_covariance(sigma, p, Eigen::VectorXd::Constant(2, 0.1), 0.0, 1.0);
    CHECK(r.symmetry_error < 1e-10);
    CHECK(r.lambda_min() > 0.0);
    CHECK(r.coarse_change < 0.05);
    const auto fit = lambda_min_scaling(sigma, p, Eigen::VectorXd::Constant(2, 0.1), 7);
    MESSAGE("seed " << seed << ": λ_min exponent " << fit.exponent << ", γ change on halving "
                    << r.coarse_change << ", observed order " << r.observed_order);
    CHECK(std::abs(fit.exponent - 0.8) <= 0.15);
    CHECK(fit.min_over_scaled > 0.0);
    CHECK(fit.reports.size() == 7);
    CHECK(fit.reports.front().scaling_exponent == fit.exponent);
  }
}

TEST_CASE("Brownian driver: γ = (t − s) Id") {
  const auto p = fbm_path(0.5, 64, 3, 9);
  const auto r = malliavin_covariance(VectorFieldModel::identity(3), p, Eigen::VectorXd::Zero(3), 0.125, 0.625);
  CHECK((r.gamma - 0.5 * Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("Malliavin covariance errors") {
  const auto p = fbm_path(0.4, 64, 2, 1);
  const auto id = VectorFieldModel::identity(2);
  CHECK_THROWS_AS(malliavin_covariance(id, p, Eigen::VectorXd::Zero(2), 0.0, 0.3), ConfigError);
  CHECK_THROWS_AS(malliavin_covariance(id, p, Eigen::VectorXd::Zero(2), 0.5, 0.5), DomainError);
  CHECK_THROWS_AS(malliavin_covariance(id, p, Eigen::VectorXd::Zero(3), 0.0, 1.0), ShapeError);
  auto bare = lift_path(sample_fbm_grid(CovarianceModel::fbm(0.4), 64, 1, 1, 2), 0, 2, 1);
  CHECK_THROWS_AS(malliavin_covariance(id, bare, Eigen::VectorXd::Zero(2), 0.0, 1.0), ConfigError);
}

TEST_CASE("smoothing decay: additive case against the Gaussian oracle") {
  SmoothingDecayConfig cfg;
  cfg.samples = 40000;
  cfg.seed = 4;
  cfg.levels = 10;
  for (double h : {0.4, 0.5}) {
    const auto r = smoothing_decay_experiment(VectorFieldModel::identity(2), CovarianceModel::fbm(h), cfg);
    REQUIRE(r.oracle.size() == r.rs.size());
    for (std::size_t i = r.fit_first; i <= r.fit_last; ++i)
      CHECK(std::abs(r.estimates[i] / r.oracle[i] - 1) <= 0.1);
    MESSAGE("H = " << h << ": slope " << r.slope << " on " << r.fit_last - r.fit_first + 1 << " points");
    CHECK(r.slope <= -h + 0.15);
    // r → 0: no smoothing yet
    CHECK(std::abs(r.estimates[0] / r.start_value - 1) <= 0.05);
    CHECK(r.start_value == doctest::Approx(4.0));
  }
  cfg.beta = 2;
  const auto r2 = smoothing_decay_experiment(VectorFieldModel::identity(1), CovarianceModel::fbm(0.4), cfg);
  CHECK(r2.start_value == doctest::Approx(16.0));
  for (std::size_t i = r2.fit_first; i <= r2.fit_last; ++i)
    CHECK(std::abs(r2.estimates[i] / r2.oracle[i] - 1) <= 0.1);

  SmoothingDecayConfig again = cfg;
  const auto r3 = smoothing_decay_experiment(VectorFieldModel::identity(1), CovarianceModel::fbm(0.4), again);
  CHECK(r3.estimates == r2.estimates);
}

TEST_CASE("smoothing decay: multiplicative elliptic case") {
  SmoothingDecayConfig cfg;
  cfg.samples = 2000;
  cfg.seed = 8;
  cfg.min_cells = 4;
  cfg.noise_sigmas = 5.0;
  const auto r = smoothing_decay_experiment(VectorFieldModel::smooth_elliptic(2), CovarianceModel::fbm(0.4), cfg);
  MESSAGE("multiplicative slope " << r.slope << " on r in [" << r.rs[r.fit_first] << ", " << r.rs[r.fit_last]
                                  << "]");
  CHECK(r.oracle.empty());
  CHECK(r.slope <= -0.4 + 0.15);
  CHECK(r.estimates[0] < r.start_value);

  SmoothingDecayConfig bad = cfg;
  bad.beta = 3;
  CHECK_THROWS_AS(smoothing_decay_experiment(VectorFieldModel::identity(1), CovarianceModel::fbm(0.4), bad),
                  DomainError);
  bad = cfg;
  bad.samples = 10;
  CHECK_THROWS_AS(smoothing_decay_experiment(VectorFieldModel::identity(1), CovarianceModel::fbm(0.4), bad),
                  ConfigError);
}
