#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "roughflow/errors.hpp"
#include "roughflow/tensor_algebra.hpp"
#include "unit/test_support.hpp"

using namespace roughflow;
using roughflow::testing::random_lie;
using roughflow::testing::random_points;
using roughflow::testing::random_tensor;

namespace {

// Index-by-index convolution: (a (x) b)_{w} = sum over splits w = u v of a_u b_v.
TruncatedTensor convolution_oracle(const TruncatedTensor& a, const TruncatedTensor& b) {
  const int d = a.dim();
  const int n = a.degree();
  TruncatedTensor r(d, n);
  for (int k = 0; k <= n; ++k) {
    const int total = static_cast<int>(r.level(k).size());
    for (int idx = 0; idx < total; ++idx) {
      std::vector<int> w(k);
      int rem = idx;
      for (int p = k - 1; p >= 0; --p) {
        w[p] = rem % d;
        rem /= d;
      }
      double s = 0.0;
      for (int split = 0; split <= k; ++split) {
        std::vector<int> u(w.begin(), w.begin() + split);
        std::vector<int> v(w.begin() + split, w.end());
        s += a.coeff(u) * b.coeff(v);
      }
      r.coeff(w) = s;
    }
  }
  return r;
}

// Antipode of a group-like element: word reversal with sign (-1)^k.
TruncatedTensor antipode_oracle(const TruncatedTensor& g) {
  const int d = g.dim();
  TruncatedTensor r(d, g.degree());
  for (int k = 0; k <= g.degree(); ++k) {
    const int total = static_cast<int>(r.level(k).size());
    for (int idx = 0; idx < total; ++idx) {
      std::vector<int> w(k);
      int rem = idx;
      for (int p = k - 1; p >= 0; --p) {
        w[p] = rem % d;
        rem /= d;
      }
      std::vector<int> rev(w.rbegin(), w.rend());
      r.coeff(w) = (k % 2 == 0 ? 1.0 : -1.0) * g.coeff(rev);
    }
  }
  return r;
}

TruncatedTensor letter(int d, int n, int i, double c = 1.0) {
  TruncatedTensor e(d, n);
  std::array<int, 1> w{i};
  e.coeff(w) = c;
  return e;
}

double rel_diff(const TruncatedTensor& a, const TruncatedTensor& b) {
  double scale = 1.0;
  for (double v : b.data()) scale = std::max(scale, std::abs(v));
  return max_abs_diff(a, b) / scale;
}

}  // namespace

TEST_CASE("tensor_mul of two letters at degree 2") {
  const double a = 1.5, b = -0.7;
  TruncatedTensor x = TruncatedTensor::unit(2, 2) + letter(2, 2, 0, a);
  TruncatedTensor y = TruncatedTensor::unit(2, 2) + letter(2, 2, 1, b);
  TruncatedTensor p = tensor_mul(x, y);
  CHECK(p.scalar() == 1.0);
  CHECK(p.level(1)[0] == a);
  CHECK(p.level(1)[1] == b);
  std::array<int, 2> w01{0, 1};
  std::array<int, 2> w10{1, 0};
  CHECK(p.coeff(w01) == a * b);
  CHECK(p.coeff(w10) == 0.0);
}

TEST_CASE("unit is neutral and mismatched shapes are rejected") {
  std::mt19937_64 rng(1);
  TruncatedTensor x = random_tensor(rng, 3, 3);
  CHECK(max_abs_diff(tensor_mul(TruncatedTensor::unit(3, 3), x), x) == 0.0);
  CHECK(max_abs_diff(tensor_mul(x, TruncatedTensor::unit(3, 3)), x) == 0.0);
  CHECK_THROWS_AS(tensor_mul(x, TruncatedTensor(2, 3)), ShapeError);
  CHECK_THROWS_AS(tensor_mul(x, TruncatedTensor(3, 2)), ShapeError);
  CHECK_THROWS_AS(TruncatedTensor(2, 4), ShapeError);
}

TEST_CASE("tensor_mul matches the word-split convolution oracle") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    TruncatedTensor a = random_tensor(rng, 2, 3);
    TruncatedTensor b = random_tensor(rng, 2, 3);
    CHECK(rel_diff(tensor_mul(a, b), convolution_oracle(a, b)) < 1e-14);
  }
}

TEST_CASE("tensor_mul is associative") {
  std::mt19937_64 rng(11);
  for (int d = 1; d <= 3; ++d) {
    for (int n = 1; n <= 3; ++n) {
      for (int rep = 0; rep < 10; ++rep) {
        TruncatedTensor a = random_tensor(rng, d, n);
        TruncatedTensor b = random_tensor(rng, d, n);
        TruncatedTensor c = random_tensor(rng, d, n);
        CHECK(rel_diff(tensor_mul(tensor_mul(a, b), c), tensor_mul(a, tensor_mul(b, c))) < 1e-12);
      }
    }
  }
}

TEST_CASE("group_exp closed forms") {
  CHECK(max_abs_diff(group_exp(LieElement(TruncatedTensor(2, 3))).tensor(),
                     TruncatedTensor::unit(2, 3)) == 0.0);
  const double a = 0.8;
  GroupElement g = group_exp(LieElement(letter(2, 2, 0, a)));
  std::array<int, 2> w00{0, 0};
  CHECK(g.level(1)[0] == a);
  CHECK(g.level(1)[1] == 0.0);
  CHECK(g.tensor().coeff(w00) == doctest::Approx(a * a / 2).epsilon(1e-15));
}

TEST_CASE("exp and log are mutually inverse") {
  std::mt19937_64 rng(3);
  for (int d = 1; d <= 3; ++d) {
    for (int n = 1; n <= 3; ++n) {
      for (int rep = 0; rep < 10; ++rep) {
        LieElement l = random_lie(rng, d, n, 0.7);
        CHECK(lie_defect(l.tensor()) < 1e-12);
        GroupElement g = group_exp(l);
        CHECK(shuffle_defect(g.tensor()) < 1e-12);
        LieElement back = group_log(g);
        CHECK(rel_diff(back.tensor(), l.tensor()) < 1e-12);
        CHECK(lie_defect(back.tensor()) < 1e-12);
      }
    }
  }
}

TEST_CASE("log of exp(a e1 + b [e1,e2])") {
  const double a = 0.3, b = -1.2;
  TruncatedTensor l = letter(2, 3, 0, a) + b * lie_bracket(letter(2, 3, 0), letter(2, 3, 1));
  LieElement back = group_log(group_exp(LieElement(l)));
  CHECK(max_abs_diff(back.tensor(), l) < 1e-15);
}

TEST_CASE("log rejects tensors with level 0 different from 1") {
  TruncatedTensor t = TruncatedTensor::unit(2, 2);
  t.data()[0] = 2.0;
  CHECK_THROWS_AS(group_log(t), DomainError);
  CHECK_THROWS_AS(GroupElement{t}, DomainError);
}

TEST_CASE("log of a two-segment signature has the step-2 BCH area") {
  Eigen::VectorXd a(2), b(2);
  a << 0.4, -1.1;
  b << 0.9, 0.25;
  std::vector<Eigen::VectorXd> pts{Eigen::VectorXd::Zero(2), a, a + b};
  LieElement l = group_log(pl_signature(pts, 2));
  auto l2 = l.tensor().level(2);
  // level 2 of log(exp(a) exp(b)) = 1/2 (a(x)b - b(x)a)
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(l2[i * 2 + j] == doctest::Approx(0.5 * (a[i] * b[j] - b[i] * a[j])).epsilon(1e-14));
    }
  }
}

TEST_CASE("group_inverse") {
  CHECK(max_abs_diff(group_inverse(GroupElement::identity(3, 3)).tensor(),
                     TruncatedTensor::unit(3, 3)) == 0.0);
  GroupElement g = group_exp(LieElement(letter(1, 3, 0, 0.6)));
  GroupElement expected = group_exp(LieElement(letter(1, 3, 0, -0.6)));
  CHECK(max_abs_diff(group_inverse(g).tensor(), expected.tensor()) < 1e-15);

  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    GroupElement h = group_exp(random_lie(rng, 2, 3));
    GroupElement v = group_inverse(h);
    CHECK(rel_diff((v * h).tensor(), TruncatedTensor::unit(2, 3)) < 1e-12);
    CHECK(rel_diff((h * v).tensor(), TruncatedTensor::unit(2, 3)) < 1e-12);
    CHECK(rel_diff(v.tensor(), antipode_oracle(h.tensor())) < 1e-12);
  }
}

TEST_CASE("homogeneous_norm") {
  CHECK(homogeneous_norm(GroupElement::identity(2, 3)) == 0.0);
  const double a = -0.45;
  CHECK(homogeneous_norm(group_exp(LieElement(letter(2, 2, 0, a)))) >= std::abs(a));
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    GroupElement g = group_exp(random_lie(rng, 3, 3));
    const double base = homogeneous_norm(g);
    for (double lambda : {0.5, 2.0, 10.0}) {
      CHECK(homogeneous_norm(dilate(g, lambda)) == doctest::Approx(lambda * base).epsilon(1e-12));
    }
  }
}

TEST_CASE("pl_signature of a single segment is exp of the increment") {
  Eigen::VectorXd v(3);
  v << 0.2, -0.5, 1.3;
  std::vector<Eigen::VectorXd> pts{Eigen::VectorXd::Zero(3), v};
  TruncatedTensor l1(3, 3);
  for (int i = 0; i < 3; ++i) l1.level(1)[i] = v[i];
  CHECK(max_abs_diff(pl_signature(pts, 3).tensor(), group_exp(LieElement(l1)).tensor()) < 1e-15);
  std::vector<Eigen::VectorXd> one{v};
  CHECK_THROWS_AS(pl_signature(one, 2), DomainError);
}

TEST_CASE("two-segment Levy area") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 0.3;
  b << -0.2, 0.7;
  std::vector<Eigen::VectorXd> pts{Eigen::VectorXd::Zero(2), a, a + b};
  GroupElement s = pl_signature(pts, 2);
  std::array<int, 2> w01{0, 1};
  std::array<int, 2> w10{1, 0};
  const double area = 0.5 * (s.tensor().coeff(w01) - s.tensor().coeff(w10));
  CHECK(area == doctest::Approx(0.5 * (a[0] * b[1] - a[1] * b[0])).epsilon(1e-14));
}

TEST_CASE("signature properties over random piecewise-linear paths") {
  std::mt19937_64 rng(13);
  for (int d = 1; d <= 3; ++d) {
    for (int rep = 0; rep < 10; ++rep) {
      auto pts = random_points(rng, d, 9, 0.5);
      GroupElement s = pl_signature(pts, 3);
      CHECK(shuffle_defect(s.tensor()) < 1e-12);

      for (std::size_t u = 1; u + 1 < pts.size(); ++u) {
        std::span<const Eigen::VectorXd> all(pts);
        GroupElement left = pl_signature(all.subspan(0, u + 1), 3);
        GroupElement right = pl_signature(all.subspan(u), 3);
        CHECK(rel_diff((left * right).tensor(), s.tensor()) < 1e-12);
      }

      std::vector<Eigen::VectorXd> rev(pts.rbegin(), pts.rend());
      CHECK(rel_diff(pl_signature(rev, 3).tensor(), group_inverse(s).tensor()) < 1e-12);
    }
  }
}

TEST_CASE("dynkin projection detects non-Lie tensors") {
  TruncatedTensor t(2, 2);
  std::array<int, 2> w01{0, 1};
  t.coeff(w01) = 1.0;  // e1 (x) e2 alone is not a Lie element
  CHECK(lie_defect(t) > 0.1);
  CHECK(lie_defect(lie_bracket(letter(2, 2, 0), letter(2, 2, 1))) < 1e-15);
}

TEST_CASE("json form keeps every level") {
  std::mt19937_64 rng(17);
  TruncatedTensor t = random_tensor(rng, 2, 3);
  nlohmann::json j = to_json(t);
  CHECK(j.at("levels").size() == 4);
  CHECK(j.at("levels")[3].size() == 8);
  CHECK(max_abs_diff(tensor_from_json(j), t) == 0.0);
  j["levels"][2].erase(0);
  CHECK_THROWS_AS(tensor_from_json(j), ShapeError);
}
