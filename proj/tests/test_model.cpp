#include <doctest.h>

#include <Eigen/Dense>
#include <stdexcept>

#include "qadp/model.hpp"
#include "qadp/quadratic.hpp"
#include "qadp/rng.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace qadp;

namespace {

MatrixXd random_psd(Rng& rng, Eigen::Index n, double ridge = 0.0) {
  MatrixXd F(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) F(i, j) = rng.normal();
  return F.transpose() * F + ridge * MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("quad_eval matches the hand-computed example") {
  MatrixXd P(2, 2);
  P << 2, 0, 0, 4;
  VectorXd p(2);
  p << 1, -1;
  QuadraticFunction v(P, p, 0.5);
  VectorXd x(2);
  x << 1, 1;
  // 0.5*(2+4) + (1-1) + 0.5
  CHECK(v.eval(x) == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(quad_eval(v, x) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("zero function evaluates to zero with zero gradient") {
  auto v = QuadraticFunction::zero(3);
  VectorXd x = VectorXd::Constant(3, 2.0);
  CHECK(v.eval(x) == 0.0);
  CHECK(v.gradient(x).norm() == 0.0);
}

TEST_CASE("quad_gradient matches central finite differences") {
  Rng rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index n = 1 + (rep % 5);
    QuadraticFunction v(random_psd(rng, n), rng.normal_vector(n), rng.normal());
    for (int k = 0; k < 10; ++k) {
      VectorXd x = rng.normal_vector(n);
      VectorXd g = v.gradient(x);
      const double h = 1e-6;
      for (Eigen::Index i = 0; i < n; ++i) {
        VectorXd e = VectorXd::Zero(n);
        e[i] = h;
        const double fd = (v.eval(x + e) - v.eval(x - e)) / (2 * h);
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("constructor symmetrizes within tolerance and rejects beyond") {
  MatrixXd P(2, 2);
  P << 1.0, 1e-10, 0.0, 1.0;
  QuadraticFunction v(P, VectorXd::Zero(2), 0.0);
  CHECK(v.P()(0, 1) == v.P()(1, 0));

  MatrixXd bad(2, 2);
  bad << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(QuadraticFunction(bad, VectorXd::Zero(2), 0.0),
                  std::invalid_argument);
}

TEST_CASE("constructor rejects indefinite P") {
  MatrixXd P(2, 2);
  P << 1.0, 0.0, 0.0, -1e-6;
  CHECK_THROWS_AS(QuadraticFunction(P, VectorXd::Zero(2), 0.0),
                  std::invalid_argument);
  // within eigenvalue tolerance is fine
  MatrixXd ok(2, 2);
  ok << 1.0, 0.0, 0.0, -1e-9;
  CHECK_NOTHROW(QuadraticFunction(ok, VectorXd::Zero(2), 0.0));
}

TEST_CASE("eval rejects dimension mismatch") {
  auto v = QuadraticFunction::zero(3);
  CHECK_THROWS_AS(v.eval(VectorXd::Zero(2)), std::invalid_argument);
  QuadraticFunction w(MatrixXd::Identity(2, 2), VectorXd::Zero(2), 0.0);
  CHECK_THROWS_AS(w.gradient(VectorXd::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(QuadraticFunction(MatrixXd::Identity(2, 2), VectorXd::Zero(3), 0.0),
                  std::invalid_argument);
}

TEST_CASE("stage cost evaluates quadratic plus hinge terms") {
  // n = 2, m = 0, cost = max(0, x_0 - 1)
  PwlTerm term{.f = (VectorXd(2) << 1, 0).finished(), .b = -1.0};
  StageCost cost(MatrixXd::Zero(2, 2), MatrixXd::Zero(0, 0), MatrixXd::Zero(2, 0),
                 VectorXd::Zero(2), VectorXd::Zero(0), 0.0, {term});
  VectorXd x(2);
  x << 2, 7;
  auto g = cost.eval(x, VectorXd::Zero(0));
  REQUIRE(g.has_value());
  CHECK(*g == doctest::Approx(1.0).epsilon(1e-12));
  x << 0.5, 7;
  CHECK(*cost.eval(x, VectorXd::Zero(0)) == doctest::Approx(0.0));
}

TEST_CASE("stage cost reports box violations as infeasible") {
  // x'x + u'u with |u| <= 0.4
  const Eigen::Index n = 2, m = 1;
  MatrixXd F(2, n + m);
  F << 0, 0, 1, 0, 0, -1;
  VectorXd f = VectorXd::Constant(2, 0.4);
  StageCost cost(MatrixXd::Identity(n, n), MatrixXd::Identity(m, m),
                 MatrixXd::Zero(n, m), VectorXd::Zero(n), VectorXd::Zero(m), 0.0,
                 {}, F, f);
  VectorXd x = VectorXd::Ones(n);
  VectorXd ok(1), bad(1);
  ok << 0.3;
  bad << 0.5;
  CHECK(cost.eval(x, ok).has_value());
  CHECK(*cost.eval(x, ok) == doctest::Approx(2.09));
  CHECK_FALSE(cost.eval(x, bad).has_value());
  CHECK_FALSE(cost.feasible(x, bad));
  // just over the line but within feasibility tolerance still evaluates
  VectorXd edge(1);
  edge << 0.4 + 1e-8;
  CHECK(cost.eval(x, edge).has_value());
}

TEST_CASE("stage cost validation") {
  const Eigen::Index n = 1, m = 1;
  MatrixXd one = MatrixXd::Identity(1, 1);

  SUBCASE("Quu must be PSD") {
    CHECK_THROWS_AS(StageCost(one, -one, MatrixXd::Zero(1, 1), VectorXd::Zero(1),
                              VectorXd::Zero(1), 0.0),
                    std::invalid_argument);
  }
  SUBCASE("joint block must be PSD when no state is exogenous") {
    MatrixXd qxu(1, 1);
    qxu << 2.0;  // [[1, 2],[2, 1]] indefinite
    CHECK_THROWS_AS(StageCost(one, one, qxu, VectorXd::Zero(1), VectorXd::Zero(1), 0.0),
                    std::invalid_argument);
  }
  SUBCASE("exogenous coupling exempts the state from the joint block") {
    MatrixXd qxu(1, 1);
    qxu << 2.0;
    StageCost c(one, one, qxu, VectorXd::Zero(1), VectorXd::Zero(1), 0.0, {},
                MatrixXd(), VectorXd(), MatrixXd(), VectorXd(), {0});
    CHECK(c.exogenous_states().size() == 1);
  }
  SUBCASE("dimension mismatches throw") {
    CHECK_THROWS_AS(StageCost(one, one, MatrixXd::Zero(2, 1), VectorXd::Zero(1),
                              VectorXd::Zero(1), 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(StageCost(one, one, MatrixXd::Zero(1, 1), VectorXd::Zero(2),
                              VectorXd::Zero(1), 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("stage cost is jointly convex over feasible pairs") {
  // three-point convexity check on random PSD-block costs with hinge terms
  Rng rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = 2, m = 2;
    MatrixXd W(n + m, n + m);
    for (Eigen::Index i = 0; i < n + m; ++i)
      for (Eigen::Index j = 0; j < n + m; ++j) W(i, j) = rng.normal();
    MatrixXd block = W.transpose() * W;
    std::vector<PwlTerm> pwl;
    pwl.push_back({.f = rng.normal_vector(n + m), .b = rng.normal()});
    StageCost cost(block.topLeftCorner(n, n), block.bottomRightCorner(m, m),
                   block.topRightCorner(n, m), rng.normal_vector(n),
                   rng.normal_vector(m), rng.normal(), pwl);
    for (int k = 0; k < 20; ++k) {
      VectorXd xa = rng.normal_vector(n), ua = rng.normal_vector(m);
      VectorXd xb = rng.normal_vector(n), ub = rng.normal_vector(m);
      const double ga = *cost.eval(xa, ua);
      const double gb = *cost.eval(xb, ub);
      const double gm = *cost.eval(0.5 * (xa + xb), 0.5 * (ua + ub));
      CHECK(gm <= 0.5 * ga + 0.5 * gb + 1e-9);
    }
  }
}

TEST_CASE("rng streams are deterministic and splittable") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.normal() == b.normal());
    CHECK(a.uniform() == b.uniform());
    CHECK(a.gamma(2.5) == b.gamma(2.5));
  }
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("rng distribution moments are sane") {
  Rng rng(7);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));

  // Beta(2, 10): mean 1/6
  double bsum = 0;
  for (int i = 0; i < n; ++i) bsum += rng.beta(2.0, 10.0);
  CHECK(bsum / n == doctest::Approx(1.0 / 6.0).epsilon(0.02));

  // Gamma(3): mean 3, variance 3
  double gsum = 0, gsq = 0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gamma(3.0);
    gsum += g;
    gsq += g * g;
  }
  const double gmean = gsum / n;
  CHECK(gmean == doctest::Approx(3.0).epsilon(0.02));
  CHECK(gsq / n - gmean * gmean == doctest::Approx(3.0).epsilon(0.05));
}
