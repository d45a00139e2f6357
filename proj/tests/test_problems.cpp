#include "qadp/problems.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <doctest.h>
#include <stdexcept>
#include <vector>

#include "qadp/baselines.hpp"
#include "qadp/policy.hpp"
#include "qadp/rng.hpp"

using namespace qadp;

namespace {

double spectral_radius(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::VectorXd stack(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd v(a.size() + b.size());
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("box regulator matches its stated shape") {
  const BenchmarkProblem bp = make_box_lqr({}, 3);
  const ControlProblem& prob = bp.problem;
  REQUIRE(prob.n == 12);
  REQUIRE(prob.m == 3);
  CHECK(prob.gamma == 1.0);
  CHECK_NOTHROW(validate(prob));

  const StageCost& g = prob.cost;
  CHECK((g.Qxx() - Eigen::MatrixXd::Identity(12, 12)).norm() == 0.0);
  CHECK((g.Quu() - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
  CHECK(g.Qxu().norm() == 0.0);
  CHECK(g.qx().norm() == 0.0);
  CHECK(g.qu().norm() == 0.0);
  CHECK(g.q0() == 0.0);
  CHECK(g.pwl().empty());

  const Eigen::VectorXd x = Eigen::VectorXd::Zero(12);
  CHECK(g.feasible(x, Eigen::VectorXd::Constant(3, 0.39)));
  CHECK(g.feasible(x, Eigen::VectorXd::Constant(3, -0.39)));
  Eigen::VectorXd u = Eigen::VectorXd::Zero(3);
  u[1] = 0.41;
  CHECK_FALSE(g.feasible(x, u));
  u[1] = -0.41;
  CHECK_FALSE(g.feasible(x, u));

  CHECK((bp.initial_value.P() - 2.0 * Eigen::MatrixXd::Identity(12, 12))
            .norm() == 0.0);
  CHECK(bp.initial_value.p().norm() == 0.0);
  CHECK(bp.initial_value.pi() == 0.0);
}

TEST_CASE("box dynamics sit at unit spectral radius with additive noise") {
  const BenchmarkProblem bp = make_box_lqr({}, 11);
  const auto& mom = bp.problem.dynamics.moments;
  CHECK(spectral_radius(mom.Abar()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mom.Bbar().cwiseAbs().maxCoeff() <= 0.5);
  CHECK(mom.cbar().norm() == 0.0);
  CHECK((mom.cov_c() - 0.4 * Eigen::MatrixXd::Identity(12, 12)).norm() == 0.0);
  CHECK(mom.cov_A(2, 7).norm() == 0.0);
  CHECK(mom.cov_B(0, 1).norm() == 0.0);

  // (A, B) are fixed; only the additive term is random
  Rng rng(5);
  const DynamicsDraw d1 = bp.problem.dynamics.sampler(rng);
  const DynamicsDraw d2 = bp.problem.dynamics.sampler(rng);
  CHECK((d1.A - mom.Abar()).norm() == 0.0);
  CHECK((d2.A - d1.A).norm() == 0.0);
  CHECK((d2.B - d1.B).norm() == 0.0);
  CHECK((d2.c - d1.c).norm() > 0.0);

  // noise second moment against the declared covariance
  Rng rng2(17);
  Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(12, 12);
  const int nd = 20000;
  for (int k = 0; k < nd; ++k) {
    const Eigen::VectorXd c = bp.problem.dynamics.sampler(rng2).c;
    sum2 += c * c.transpose();
  }
  sum2 /= nd;
  CHECK((sum2 - 0.4 * Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() <
        0.03);
}

TEST_CASE("box generation is bit-deterministic per seed") {
  const BenchmarkProblem a = make_box_lqr({}, 7);
  const BenchmarkProblem b = make_box_lqr({}, 7);
  const BenchmarkProblem c = make_box_lqr({}, 8);
  CHECK((a.problem.dynamics.moments.Abar() - b.problem.dynamics.moments.Abar())
            .norm() == 0.0);
  CHECK((a.problem.dynamics.moments.Bbar() - b.problem.dynamics.moments.Bbar())
            .norm() == 0.0);
  CHECK((a.problem.dynamics.moments.Abar() - c.problem.dynamics.moments.Abar())
            .norm() > 0.0);

  Rng r1(9), r2(9);
  const DynamicsDraw da = a.problem.dynamics.sampler(r1);
  const DynamicsDraw db = b.problem.dynamics.sampler(r2);
  CHECK((da.c - db.c).norm() == 0.0);

  Rng i1(4), i2(4);
  CHECK((a.problem.initial_state(i1) - b.problem.initial_state(i2)).norm() ==
        0.0);
}

TEST_CASE("commitment cost pieces are mutually consistent") {
  const BenchmarkProblem bp = make_commitments({}, 21);
  const ControlProblem& prob = bp.problem;
  REQUIRE(prob.n == 12);
  REQUIRE(prob.m == 6);
  CHECK(prob.gamma == 1.0);
  CHECK_NOTHROW(validate(prob));

  const StageCost& g = prob.cost;
  Eigen::MatrixXd Qxx_expect = Eigen::MatrixXd::Zero(12, 12);
  Qxx_expect.topLeftCorner(6, 6).setIdentity();
  CHECK((g.Qxx() - Qxx_expect).norm() == 0.0);
  CHECK((g.Quu() - 0.01 * Eigen::MatrixXd::Identity(6, 6)).norm() == 0.0);
  CHECK(g.Qxu().norm() == 0.0);
  CHECK(g.qx().tail(6).norm() == 0.0);

  // the published linear terms encode the target and the steady commitment
  const Eigen::VectorXd target = -0.5 * g.qx().head(6);
  const Eigen::VectorXd u_ss = -g.qu() / (2.0 * 0.01);
  CHECK(target.minCoeff() >= 4.0);
  CHECK(target.maxCoeff() <= 5.0);
  CHECK(u_ss.minCoeff() >= 0.0);
  CHECK(u_ss.maxCoeff() <= 3.0);

  // the steady commitment must solve the steady-state problem of the cost
  // with its input regularization removed
  Eigen::VectorXd qx(12);
  qx << -2.0 * target, Eigen::VectorXd::Zero(6);
  const StageCost bare(Qxx_expect, Eigen::MatrixXd::Zero(6, 6),
                       Eigen::MatrixXd::Zero(12, 6), qx,
                       Eigen::VectorXd::Zero(6), target.squaredNorm(), {},
                       g.F_in(), g.f_in());
  const SsoResult sso = ce_sso(bare, prob.dynamics.moments.Abar(),
                               prob.dynamics.moments.Bbar(),
                               prob.dynamics.moments.cbar());
  REQUIRE(sso.status == SolveStatus::optimal);
  CHECK((sso.v - u_ss).cwiseAbs().maxCoeff() < 1e-6);

  // commitments are boxed to [0, u_max]
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(12);
  CHECK(g.feasible(x0, Eigen::VectorXd::Constant(6, 2.99)));
  CHECK(g.feasible(x0, Eigen::VectorXd::Zero(6)));
  CHECK_FALSE(g.feasible(x0, Eigen::VectorXd::Constant(6, 3.01)));
  Eigen::VectorXd u = Eigen::VectorXd::Zero(6);
  u[3] = -0.01;
  CHECK_FALSE(g.feasible(x0, u));

  // start on target with nothing uncalled
  Rng ir(2);
  const Eigen::VectorXd x_init = prob.initial_state(ir);
  CHECK((x_init.head(6) - target).norm() == 0.0);
  CHECK(x_init.tail(6).norm() == 0.0);
}

TEST_CASE("commitment draws keep the two-by-two block pattern") {
  const BenchmarkProblem bp = make_commitments({}, 33);
  Rng rng(12);
  Eigen::MatrixXd B_expect = Eigen::MatrixXd::Zero(12, 6);
  B_expect.bottomRows(6).setIdentity();
  for (int k = 0; k < 50; ++k) {
    const DynamicsDraw d = bp.problem.dynamics.sampler(rng);
    REQUIRE(d.A.rows() == 12);
    CHECK(d.A.bottomLeftCorner(6, 6).norm() == 0.0);
    for (Eigen::Index i = 0; i < 6; ++i) {
      for (Eigen::Index j = 0; j < 6; ++j) {
        if (i == j) continue;
        CHECK(d.A(i, j) == 0.0);
        CHECK(d.A(i, 6 + j) == 0.0);
        CHECK(d.A(6 + i, 6 + j) == 0.0);
      }
      CHECK(d.A(i, i) > 0.0);                // r_i (1 - gamma_dist_i)
      CHECK(d.A(i, 6 + i) > 0.0);            // gamma_call_i
      CHECK(d.A(i, 6 + i) < 1.0);
      CHECK(d.A(6 + i, 6 + i) > 0.0);        // 1 - gamma_call_i
      CHECK(d.A(6 + i, 6 + i) < 1.0);
      CHECK(d.A(i, 6 + i) + d.A(6 + i, 6 + i) == doctest::Approx(1.0));
    }
    CHECK((d.B - B_expect).norm() == 0.0);
    CHECK(d.c.norm() == 0.0);
  }
}

TEST_CASE("commitment sampler means match the stated distributions") {
  const CommitmentsParams params;
  const BenchmarkProblem bp = make_commitments(params, 44);
  const Eigen::Index mc = 6;

  Eigen::VectorXd mean_r(mc), beta_call(mc), beta_dist(mc);
  mean_r << 1.0, 1.1, 1.1, 1.0, 1.1, 1.1;
  beta_call << 10.3, 10.0, 12.9, 10.5, 11.8, 10.5;
  beta_dist << 13.0, 12.7, 15.9, 12.8, 13.2, 14.2;

  const Eigen::Index draws = 1000000;
  Eigen::VectorXd sum_g = Eigen::VectorXd::Zero(mc);   // growth r(1 - gd)
  Eigen::VectorXd sum_g2 = Eigen::VectorXd::Zero(mc);
  Eigen::VectorXd sum_c = Eigen::VectorXd::Zero(mc);   // call intensity
  Eigen::VectorXd sum_c2 = Eigen::VectorXd::Zero(mc);
  double sum03 = 0.0, sum05 = 0.0;  // cross moments for the sign checks
  Rng rng(91);
  for (Eigen::Index k = 0; k < draws; ++k) {
    const DynamicsDraw d = bp.problem.dynamics.sampler(rng);
    for (Eigen::Index i = 0; i < mc; ++i) {
      const double gi = d.A(i, i);
      const double ci = d.A(i, 6 + i);
      sum_g[i] += gi;
      sum_g2[i] += gi * gi;
      sum_c[i] += ci;
      sum_c2[i] += ci * ci;
    }
    sum03 += d.A(0, 0) * d.A(3, 3);
    sum05 += d.A(0, 0) * d.A(5, 5);
  }
  for (Eigen::Index i = 0; i < mc; ++i) {
    const double mg = sum_g[i] / draws;
    const double sg = std::sqrt((sum_g2[i] / draws - mg * mg) / draws);
    const double expect_g =
        mean_r[i] * (1.0 - 3.0 / (3.0 + beta_dist[i]));
    CHECK(std::abs(mg - expect_g) < 3.0 * sg);

    const double mcall = sum_c[i] / draws;
    const double scall = std::sqrt((sum_c2[i] / draws - mcall * mcall) / draws);
    const double expect_c = 2.0 / (2.0 + beta_call[i]);
    CHECK(std::abs(mcall - expect_c) < 3.0 * scall);
  }

  // correlation survives the independent intensity damping with its sign:
  // classes (1, 4) are strongly positively correlated, (1, 6) negatively
  const double m0 = sum_g[0] / draws, m3 = sum_g[3] / draws,
               m5 = sum_g[5] / draws;
  const double v0 = sum_g2[0] / draws - m0 * m0;
  const double v3 = sum_g2[3] / draws - m3 * m3;
  const double v5 = sum_g2[5] / draws - m5 * m5;
  const double corr03 =
      (sum03 / draws - m0 * m3) / std::sqrt(v0 * v3);
  const double corr05 =
      (sum05 / draws - m0 * m5) / std::sqrt(v0 * v5);
  CHECK(corr03 > 0.15);
  CHECK(corr05 < -0.10);
}

TEST_CASE("commitment lower bound solves the relaxed recursion") {
  const BenchmarkProblem bp = make_commitments({}, 55);
  RelaxationSpec relax;
  const QuadraticFunction lb = ce_lqr_lower_bound(bp.problem, relax);
  CHECK((bp.initial_value.P() - lb.P()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((bp.initial_value.p() - lb.p()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("commitment generation is bit-deterministic per seed") {
  const BenchmarkProblem a = make_commitments({}, 77);
  const BenchmarkProblem b = make_commitments({}, 77);
  CHECK((a.problem.dynamics.moments.Abar() - b.problem.dynamics.moments.Abar())
            .norm() == 0.0);
  CHECK((a.problem.cost.qx() - b.problem.cost.qx()).norm() == 0.0);
  CHECK((a.problem.cost.qu() - b.problem.cost.qu()).norm() == 0.0);
  CHECK((a.initial_value.P() - b.initial_value.P()).norm() == 0.0);
  Rng r1(3), r2(3);
  CHECK((a.problem.dynamics.sampler(r1).A - b.problem.dynamics.sampler(r2).A)
            .norm() == 0.0);
}

TEST_CASE("supply chain instance matches its stated shape") {
  const BenchmarkProblem bp = make_supply_chain({}, 13);
  const ControlProblem& prob = bp.problem;
  REQUIRE(prob.n == 8);
  REQUIRE(prob.m == 8);
  CHECK(prob.gamma == 1.0);
  CHECK_NOTHROW(validate(prob));

  const StageCost& g = prob.cost;
  Eigen::MatrixXd Qxx_expect = Eigen::MatrixXd::Zero(8, 8);
  Qxx_expect.topLeftCorner(4, 4) = 0.01 * Eigen::MatrixXd::Identity(4, 4);
  CHECK((g.Qxx() - Qxx_expect).norm() == 0.0);
  CHECK(g.Quu().norm() == 0.0);

  // buying cost couples the price part of the state to the buy inputs
  Eigen::MatrixXd Qxu_expect = Eigen::MatrixXd::Zero(8, 8);
  Qxu_expect(4, 0) = 0.5;
  Qxu_expect(5, 1) = 0.5;
  CHECK((g.Qxu() - Qxu_expect).norm() == 0.0);

  Eigen::VectorXd qx_expect(8), qu_expect(8);
  qx_expect << 0.01, 0.01, 0.01, 0.01, 0, 0, 0, 0;
  qu_expect << 0, 0, -1.3, -1.3, 0.05, 0.05, 0.05, 0.05;
  CHECK((g.qx() - qx_expect).norm() == 0.0);
  CHECK((g.qu() - qu_expect).norm() == 0.0);

  REQUIRE(g.exogenous_states() == std::vector<Eigen::Index>({4, 5, 6, 7}));

  // the stage cost at a concrete feasible point, by hand
  Eigen::VectorXd x(8), u(8);
  x << 1, 1, 1, 1, 1.2, 1.4, 0.9, 1.1;     // h, p, d
  u << 0.5, 0, 0.8, 0, 0.3, 0, 0, 0;        // b, s, z
  const auto val = g.eval(x, u);
  REQUIRE(val.has_value());
  const double expect = -1.3 * 0.8 + 1.2 * 0.5 + 0.05 * 0.3 + 0.01 * 4 +
                        0.01 * 4;
  CHECK(*val == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("supply chain constraints gate flows by stock and demand") {
  const BenchmarkProblem bp = make_supply_chain({}, 13);
  const StageCost& g = bp.problem.cost;

  Eigen::VectorXd x(8);
  x << 0, 0, 0, 0, 1.0, 1.0, 1.0, 1.0;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(8);
  CHECK(g.feasible(x, u));
  u[0] = 2.0;  // buying into an empty warehouse is allowed
  u[1] = 1.5;
  CHECK(g.feasible(x, u));
  u[0] = 2.1;  // link capacity
  CHECK_FALSE(g.feasible(x, u));
  u.setZero();
  u[2] = 0.2;  // selling out of an empty warehouse is not
  CHECK_FALSE(g.feasible(x, u));
  u.setZero();
  u[4] = 0.2;  // neither is shipping out of one
  CHECK_FALSE(g.feasible(x, u));

  // warehouse capacity binds on the post-shipment holdings
  Eigen::VectorXd xc(8);
  xc << 2.5, 0, 0, 0, 1.0, 1.0, 1.0, 1.0;
  u.setZero();
  u[0] = 0.4;
  CHECK(g.feasible(xc, u));
  u[0] = 0.6;
  CHECK_FALSE(g.feasible(xc, u));

  // sales are capped by current demand
  Eigen::VectorXd xd(8);
  xd << 3, 3, 3, 3, 1.0, 1.0, 0.5, 2.0;
  u.setZero();
  u[2] = 0.4;
  CHECK(g.feasible(xd, u));
  u[2] = 0.6;
  CHECK_FALSE(g.feasible(xd, u));

  const Eigen::VectorXd neg = Eigen::VectorXd::Constant(8, -0.1);
  CHECK_FALSE(g.feasible(xd, neg));
}

TEST_CASE("supply chain moments freeze the network and rerandomize the tail") {
  const BenchmarkProblem bp = make_supply_chain({}, 29);
  const auto& mom = bp.problem.dynamics.moments;

  Eigen::MatrixXd A_expect = Eigen::MatrixXd::Zero(8, 8);
  A_expect.topLeftCorner(4, 4).setIdentity();
  CHECK((mom.Abar() - A_expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(mom.Bbar().bottomRows(4).norm() == 0.0);

  // every net column moves one unit out and/or one unit in
  const Eigen::MatrixXd D = mom.Bbar().topRows(4);
  for (Eigen::Index j = 0; j < 8; ++j) {
    CHECK(D.col(j).cwiseAbs().maxCoeff() == 1.0);
    CHECK(std::abs(D.col(j).sum()) <= 1.0);
  }
  // buy links add stock, sell links remove it, shipments conserve it
  CHECK(D.col(0).sum() == 1.0);
  CHECK(D.col(1).sum() == 1.0);
  CHECK(D.col(2).sum() == -1.0);
  CHECK(D.col(3).sum() == -1.0);
  for (Eigen::Index j = 4; j < 8; ++j) CHECK(D.col(j).sum() == 0.0);

  CHECK(mom.cbar().head(4).norm() == 0.0);
  // log-normal means exp(mu + sigma^2/2), sampled to Monte-Carlo accuracy
  Eigen::VectorXd tail_expect(4);
  tail_expect << std::exp(0.2), std::exp(0.3), std::exp(0.2), std::exp(0.6);
  CHECK((mom.cbar().tail(4) - tail_expect).cwiseAbs().maxCoeff() < 0.05);

  CHECK(mom.cov_c().topLeftCorner(4, 4).norm() == 0.0);
  const Eigen::MatrixXd tail_cov = mom.cov_c().bottomRightCorner(4, 4);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double mean_i = tail_expect[i];
    const double var_i = (std::exp(0.4) - 1.0) * mean_i * mean_i;
    CHECK(tail_cov(i, i) == doctest::Approx(var_i).epsilon(0.15));
    for (Eigen::Index j = 0; j < 4; ++j) {
      if (j == i) continue;
      CHECK(std::abs(tail_cov(i, j)) < 0.1);  // independent coordinates
    }
  }
}

TEST_CASE("supply chain relaxation penalty under-estimates the input box") {
  // the lower bound replaces the box indicator by u'Duu u + du'u; on the box
  // that substitute must never exceed zero or the bound argument collapses
  const SupplyChainParams params;
  const Eigen::MatrixXd Duu = Eigen::MatrixXd::Identity(8, 8);
  const Eigen::VectorXd du = Eigen::VectorXd::Constant(8, -params.u_max);
  Rng rng(7);
  for (int k = 0; k < 2000; ++k) {
    Eigen::VectorXd u(8);
    for (int i = 0; i < 8; ++i) u[i] = rng.uniform(0.0, params.u_max);
    CHECK(u.dot(Duu * u) + du.dot(u) <= 1e-12);
  }
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(8);
  const Eigen::VectorXd full = Eigen::VectorXd::Constant(8, params.u_max);
  CHECK(zeros.dot(Duu * zeros) + du.dot(zeros) == 0.0);
  CHECK(full.dot(Duu * full) + du.dot(full) == 0.0);

  // and the published initial value is exactly the bound built from it
  const BenchmarkProblem bp = make_supply_chain(params, 61);
  RelaxationSpec relax;
  relax.penalty_Duu = Duu;
  relax.penalty_du = du;
  relax.exogenous_states = {4, 5, 6, 7};
  const QuadraticFunction lb = ce_lqr_lower_bound(bp.problem, relax);
  CHECK((bp.initial_value.P() - lb.P()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((bp.initial_value.p() - lb.p()).cwiseAbs().maxCoeff() < 1e-9);
  for (Eigen::Index i = 4; i < 8; ++i) {
    CHECK(bp.initial_value.P().row(i).norm() == 0.0);
    CHECK(bp.initial_value.p()[i] == 0.0);
  }
}

TEST_CASE("supply chain policy gradient survives the exogenous coupling") {
  // the pinned program folds the p'b term into linear coefficients; the
  // reported gradient must still match the value's finite differences
  const BenchmarkProblem bp = make_supply_chain({}, 83);
  QadpPolicy policy(bp.problem, bp.initial_value);

  Eigen::VectorXd x(8);
  x << 1.7, 0.4, 2.2, 1.0, 1.1, 1.6, 0.8, 1.9;
  const PolicyEvalResult at = policy.evaluate(x);
  REQUIRE(at.status == SolveStatus::optimal);
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < 8; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const PolicyEvalResult rp = policy.evaluate(xp);
    const PolicyEvalResult rm = policy.evaluate(xm);
    REQUIRE(rp.status == SolveStatus::optimal);
    REQUIRE(rm.status == SolveStatus::optimal);
    const double fd = (rp.value - rm.value) / (2.0 * h);
    CHECK(at.gradient[i] ==
          doctest::Approx(fd).epsilon(1e-3).scale(std::max(1.0, std::abs(fd))));
  }
}

TEST_CASE("supply chain closed loop respects the capacity band") {
  const BenchmarkProblem bp = make_supply_chain({}, 97);
  QadpPolicy policy(bp.problem, bp.initial_value);

  Rng init(1);
  const Eigen::VectorXd x0 = bp.problem.initial_state(init);
  CHECK(x0.head(4).minCoeff() >= 0.0);
  CHECK(x0.head(4).maxCoeff() <= 3.0);
  CHECK(x0.tail(4).minCoeff() > 0.0);

  const SimulationResult roll = simulate(
      bp.problem,
      [&](const Eigen::VectorXd& x) { return policy.evaluate(x).u; }, x0, 300,
      19);
  for (Eigen::Index t = 0; t <= 300; ++t) {
    CHECK(roll.states.row(t).head(4).minCoeff() >= -1e-6);
    CHECK(roll.states.row(t).head(4).maxCoeff() <= 3.0 + 1e-6);
  }
  CHECK(std::isfinite(roll.costs.sum()));
}

TEST_CASE("generators reject malformed parameters") {
  BoxLqrParams box;
  box.u_max = 0.0;
  CHECK_THROWS_AS(make_box_lqr(box, 1), std::invalid_argument);
  box = {};
  box.n = 0;
  CHECK_THROWS_AS(make_box_lqr(box, 1), std::invalid_argument);
  box = {};
  box.r_scale = 0.0;
  CHECK_THROWS_AS(make_box_lqr(box, 1), std::invalid_argument);

  CommitmentsParams com;
  com.beta_call = Eigen::VectorXd::Constant(5, 10.0);
  CHECK_THROWS_AS(make_commitments(com, 1), std::invalid_argument);
  com = {};
  com.lambda = 0.0;
  CHECK_THROWS_AS(make_commitments(com, 1), std::invalid_argument);
  com = {};
  com.return_sd = Eigen::VectorXd::Zero(6);
  CHECK_THROWS_AS(make_commitments(com, 1), std::invalid_argument);
  com = {};
  com.target_lo = 6.0;  // inverted target band
  CHECK_THROWS_AS(make_commitments(com, 1), std::invalid_argument);

  SupplyChainParams sc;
  sc.h_max = 0.0;
  CHECK_THROWS_AS(make_supply_chain(sc, 1), std::invalid_argument);
  sc = {};
  sc.u_max = -1.0;
  CHECK_THROWS_AS(make_supply_chain(sc, 1), std::invalid_argument);
  sc = {};
  sc.moments_count = 1;
  CHECK_THROWS_AS(make_supply_chain(sc, 1), std::invalid_argument);
}
