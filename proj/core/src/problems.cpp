#include "qadp/problems.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qadp/baselines.hpp"

namespace qadp {

namespace {

Eigen::MatrixXd input_box_rows(Eigen::Index n, Eigen::Index m) {
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(2 * m, n + m);
  F.block(0, n, m, m).setIdentity();
  F.block(m, n, m, m) = -Eigen::MatrixXd::Identity(m, m);
  return F;
}

double spectral_radius(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::VectorXd resolve(const Eigen::VectorXd& given, Eigen::Index size,
                        std::initializer_list<double> fallback,
                        const char* what) {
  if (given.size() == size) return given;
  if (given.size() != 0)
    throw std::invalid_argument(std::string(what) +
                                " must have one entry per asset class");
  if (static_cast<Eigen::Index>(fallback.size()) != size)
    throw std::invalid_argument(std::string(what) +
                                " must be given explicitly for this class count");
  Eigen::VectorXd v(size);
  Eigen::Index i = 0;
  for (double x : fallback) v[i++] = x;
  return v;
}

}  // namespace

BenchmarkProblem make_box_lqr(const BoxLqrParams& params, std::uint64_t seed) {
  const Eigen::Index n = params.n, m = params.m;
  if (n < 1 || m < 1)
    throw std::invalid_argument("box regulator needs n >= 1 and m >= 1");
  if (!(params.u_max > 0.0))
    throw std::invalid_argument("input bound must be positive");
  if (params.noise_var < 0.0)
    throw std::invalid_argument("noise variance must be nonnegative");
  if (params.q_scale < 0.0 || !(params.r_scale > 0.0))
    throw std::invalid_argument(
        "state weight must be nonnegative and input weight positive");

  Rng rng(derive_seed(seed, 0));
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
  const double rho = spectral_radius(A);
  if (!(rho > 0.0)) throw std::runtime_error("degenerate dynamics draw");
  A /= rho;
  Eigen::MatrixXd B(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) B(i, j) = rng.uniform(-0.5, 0.5);

  StageCost cost(params.q_scale * Eigen::MatrixXd::Identity(n, n),
                 params.r_scale * Eigen::MatrixXd::Identity(m, m),
                 Eigen::MatrixXd::Zero(n, m), Eigen::VectorXd::Zero(n),
                 Eigen::VectorXd::Zero(m), 0.0, {}, input_box_rows(n, m),
                 Eigen::VectorXd::Constant(2 * m, params.u_max));

  const double sigma = std::sqrt(params.noise_var);
  DynamicsModel dyn{n, m,
                    [A, B, sigma, n](Rng& r) {
                      return DynamicsDraw{A, B, sigma * r.normal_vector(n)};
                    },
                    DynamicsMoments::constant_with_noise(
                        A, B, Eigen::VectorXd::Zero(n),
                        params.noise_var * Eigen::MatrixXd::Identity(n, n))};

  ControlProblem prob{n,
                      m,
                      1.0,
                      std::move(cost),
                      std::move(dyn),
                      [n](Rng& r) { return r.normal_vector(n); },
                      "box-lqr"};
  QuadraticFunction v1(2.0 * params.q_scale * Eigen::MatrixXd::Identity(n, n),
                       Eigen::VectorXd::Zero(n), 0.0);
  return BenchmarkProblem{std::move(prob), std::move(v1)};
}

BenchmarkProblem make_commitments(const CommitmentsParams& params,
                                  std::uint64_t seed) {
  const Eigen::Index mc = params.classes;
  if (mc < 1) throw std::invalid_argument("need at least one asset class");
  if (!(params.lambda > 0.0))
    throw std::invalid_argument("input regularization must be positive");
  if (!(params.u_max > 0.0))
    throw std::invalid_argument("commitment bound must be positive");
  if (!(params.target_lo <= params.target_hi) || params.target_lo < 0.0)
    throw std::invalid_argument("target band is empty or negative");
  if (params.moments_count < 2)
    throw std::invalid_argument("moment estimation needs at least two draws");
  if (!(params.alpha_call > 0.0) || !(params.alpha_dist > 0.0))
    throw std::invalid_argument("Beta shape parameters must be positive");

  const Eigen::VectorXd mean_r =
      resolve(params.return_mean, mc, {1.0, 1.1, 1.1, 1.0, 1.1, 1.1},
              "return mean");
  const Eigen::VectorXd sd_r =
      resolve(params.return_sd, mc, {0.1, 0.2, 0.2, 0.1, 0.2, 0.1},
              "return stddev");
  const Eigen::VectorXd beta_call = resolve(
      params.beta_call, mc, {10.3, 10.0, 12.9, 10.5, 11.8, 10.5}, "beta_call");
  const Eigen::VectorXd beta_dist = resolve(
      params.beta_dist, mc, {13.0, 12.7, 15.9, 12.8, 13.2, 14.2}, "beta_dist");
  if (mean_r.minCoeff() <= 0.0 || sd_r.minCoeff() <= 0.0 ||
      beta_call.minCoeff() <= 0.0 || beta_dist.minCoeff() <= 0.0)
    throw std::invalid_argument(
        "return and intensity parameters must be positive");

  Eigen::MatrixXd corr;
  if (params.return_corr.size() == 0) {
    if (mc != 6)
      throw std::invalid_argument(
          "return correlation must be given explicitly for this class count");
    corr.resize(6, 6);
    corr << 1, -0.06, -0.05, 0.62, -0.32, -0.44,
        -0.06, 1, -0.21, 0.18, 0.80, -0.12,
        -0.05, -0.21, 1, 0.35, -0.27, -0.19,
        0.62, 0.18, 0.35, 1, 0.18, -0.15,
        -0.32, 0.80, -0.27, 0.18, 1, 0.37,
        -0.44, -0.12, -0.19, -0.15, 0.37, 1;
  } else {
    corr = params.return_corr;
    if (corr.rows() != mc || corr.cols() != mc)
      throw std::invalid_argument("correlation matrix has wrong dimensions");
    if ((corr - corr.transpose()).cwiseAbs().maxCoeff() > 1e-9 ||
        (corr.diagonal().array() - 1.0).abs().maxCoeff() > 1e-9)
      throw std::invalid_argument(
          "correlation matrix must be symmetric with unit diagonal");
  }

  // log-normal parameters back-solved from the stated means and stddevs,
  // correlation imposed on the underlying Gaussian
  Eigen::VectorXd mu_z(mc), sig_z(mc);
  for (Eigen::Index i = 0; i < mc; ++i) {
    const double cv = sd_r[i] / mean_r[i];
    const double var_z = std::log1p(cv * cv);
    sig_z[i] = std::sqrt(var_z);
    mu_z[i] = std::log(mean_r[i]) - 0.5 * var_z;
  }
  const Eigen::MatrixXd cov_z =
      sig_z.asDiagonal() * corr * sig_z.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(cov_z);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(
        "correlation matrix must be positive definite");
  const Eigen::MatrixXd L = llt.matrixL();

  const Eigen::Index n = 2 * mc;
  const double ac = params.alpha_call, ad = params.alpha_dist;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, mc);
  B.bottomRows(mc).setIdentity();

  DynamicsSampler sampler = [mu_z, L, ac, bc = beta_call, ad, bd = beta_dist,
                             B, mc](Rng& r) {
    const Eigen::VectorXd ret =
        (mu_z + L * r.normal_vector(mc)).array().exp();
    DynamicsDraw d;
    d.A = Eigen::MatrixXd::Zero(2 * mc, 2 * mc);
    for (Eigen::Index i = 0; i < mc; ++i) {
      const double g_call = r.beta(ac, bc[i]);
      const double g_dist = r.beta(ad, bd[i]);
      d.A(i, i) = ret[i] * (1.0 - g_dist);
      d.A(i, mc + i) = g_call;
      d.A(mc + i, mc + i) = 1.0 - g_call;
    }
    d.B = B;
    d.c = Eigen::VectorXd::Zero(2 * mc);
    return d;
  };
  DynamicsModel dyn{n, mc, sampler,
                    DynamicsMoments::from_samples(sampler, n, mc,
                                                  params.moments_count,
                                                  derive_seed(seed, 1))};

  Rng rng(derive_seed(seed, 0));
  Eigen::VectorXd n_tar(mc);
  for (Eigen::Index i = 0; i < mc; ++i)
    n_tar[i] = rng.uniform(params.target_lo, params.target_hi);

  Eigen::MatrixXd Qxx = Eigen::MatrixXd::Zero(n, n);
  Qxx.topLeftCorner(mc, mc).setIdentity();
  Eigen::VectorXd qx(n);
  qx << -2.0 * n_tar, Eigen::VectorXd::Zero(mc);
  const Eigen::MatrixXd F_box = input_box_rows(n, mc);
  Eigen::VectorXd f_box(2 * mc);
  f_box.head(mc).setConstant(params.u_max);
  f_box.tail(mc).setZero();

  // the fixed steady commitment solves the tracking problem without the
  // input regularization
  const StageCost bare(Qxx, Eigen::MatrixXd::Zero(mc, mc),
                       Eigen::MatrixXd::Zero(n, mc), qx,
                       Eigen::VectorXd::Zero(mc), n_tar.squaredNorm(), {},
                       F_box, f_box);
  const SsoResult sso = ce_sso(bare, dyn.moments.Abar(), dyn.moments.Bbar(),
                               dyn.moments.cbar());
  if (sso.status != SolveStatus::optimal &&
      sso.status != SolveStatus::inaccurate)
    throw std::runtime_error("commitments steady-state solve failed");
  const Eigen::VectorXd u_ss =
      sso.v.cwiseMax(0.0).cwiseMin(params.u_max);  // clamp solver slop

  const double lam = params.lambda;
  StageCost cost(Qxx, lam * Eigen::MatrixXd::Identity(mc, mc),
                 Eigen::MatrixXd::Zero(n, mc), qx, -2.0 * lam * u_ss,
                 n_tar.squaredNorm() + lam * u_ss.squaredNorm(), {}, F_box,
                 f_box);

  ControlProblem prob{n,
                      mc,
                      1.0,
                      std::move(cost),
                      std::move(dyn),
                      [n_tar, mc](Rng&) {
                        Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * mc);
                        x.head(mc) = n_tar;
                        return x;
                      },
                      "commitments"};
  QuadraticFunction v1 = ce_lqr_lower_bound(prob, RelaxationSpec{});
  return BenchmarkProblem{std::move(prob), std::move(v1)};
}

BenchmarkProblem make_supply_chain(const SupplyChainParams& params,
                                   std::uint64_t seed) {
  if (!(params.h_max > 0.0) || !(params.u_max > 0.0))
    throw std::invalid_argument("capacities must be positive");
  if (params.alpha < 0.0 || params.beta < 0.0 || params.tau < 0.0)
    throw std::invalid_argument("cost coefficients must be nonnegative");
  if (!(params.r > 0.0))
    throw std::invalid_argument("sale price must be positive");
  if (params.log_var < 0.0)
    throw std::invalid_argument("log variance must be nonnegative");
  if (params.moments_count < 2)
    throw std::invalid_argument("moment estimation needs at least two draws");

  // two suppliers feed warehouses 1 and 2, consumers draw from 3 and 4,
  // shipments: 1->3, 2->4, 1->4, 4->3
  constexpr Eigen::Index nw = 4, ns = 2, nc = 2, m = 8, n = nw + ns + nc;
  Eigen::MatrixXd Ain = Eigen::MatrixXd::Zero(nw, m);
  Eigen::MatrixXd Aout = Eigen::MatrixXd::Zero(nw, m);
  Ain(0, 0) = 1;   // buy into warehouse 1
  Ain(1, 1) = 1;   // buy into warehouse 2
  Aout(2, 2) = 1;  // sell out of warehouse 3
  Aout(3, 3) = 1;  // sell out of warehouse 4
  Ain(2, 4) = 1; Aout(0, 4) = 1;
  Ain(3, 5) = 1; Aout(1, 5) = 1;
  Ain(3, 6) = 1; Aout(0, 6) = 1;
  Ain(2, 7) = 1; Aout(3, 7) = 1;
  const Eigen::MatrixXd D = Ain - Aout;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  A.topLeftCorner(nw, nw).setIdentity();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, m);
  B.topRows(nw) = D;

  const double sig = std::sqrt(params.log_var);
  const Eigen::Vector2d mu_p = params.mu_p, mu_d = params.mu_d;
  const auto draw_tail = [mu_p, mu_d, sig](Rng& r) {
    Eigen::VectorXd tail(4);
    for (Eigen::Index i = 0; i < 2; ++i)
      tail[i] = std::exp(mu_p[i] + sig * r.normal());
    for (Eigen::Index i = 0; i < 2; ++i)
      tail[2 + i] = std::exp(mu_d[i] + sig * r.normal());
    return tail;
  };

  DynamicsSampler sampler = [A, B, draw_tail](Rng& r) {
    DynamicsDraw d;
    d.A = A;
    d.B = B;
    d.c = Eigen::VectorXd::Zero(8);
    d.c.tail(4) = draw_tail(r);
    return d;
  };
  DynamicsModel dyn{n, m, sampler,
                    DynamicsMoments::from_samples(sampler, n, m,
                                                  params.moments_count,
                                                  derive_seed(seed, 1))};

  Eigen::MatrixXd Qxx = Eigen::MatrixXd::Zero(n, n);
  Qxx.topLeftCorner(nw, nw) =
      params.beta * Eigen::MatrixXd::Identity(nw, nw);
  // buying cost p'b as a state-input coupling; prices are exogenous so this
  // stays convex in the decisions
  Eigen::MatrixXd Qxu = Eigen::MatrixXd::Zero(n, m);
  Qxu.block(nw, 0, ns, ns) = 0.5 * Eigen::MatrixXd::Identity(ns, ns);
  Eigen::VectorXd qx = Eigen::VectorXd::Zero(n);
  qx.head(nw).setConstant(params.alpha);
  Eigen::VectorXd qu(m);
  qu << 0, 0, -params.r, -params.r, params.tau, params.tau, params.tau,
      params.tau;

  // rows: input box, post-shipment holdings in [0, h_max], outbound flow
  // capped by stock, sales capped by demand
  const Eigen::Index rows = 2 * m + 2 * nw + nw + nc;
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(rows, n + m);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(rows);
  Eigen::Index at = 0;
  F.block(at, n, m, m).setIdentity();
  f.segment(at, m).setConstant(params.u_max);
  at += m;
  F.block(at, n, m, m) = -Eigen::MatrixXd::Identity(m, m);
  at += m;
  F.block(at, 0, nw, nw).setIdentity();
  F.block(at, n, nw, m) = D;
  f.segment(at, nw).setConstant(params.h_max);
  at += nw;
  F.block(at, 0, nw, nw) = -Eigen::MatrixXd::Identity(nw, nw);
  F.block(at, n, nw, m) = -D;
  at += nw;
  F.block(at, 0, nw, nw) = -Eigen::MatrixXd::Identity(nw, nw);
  F.block(at, n, nw, m) = Aout;
  at += nw;
  for (Eigen::Index i = 0; i < nc; ++i) {
    F(at + i, nw + ns + i) = -1.0;  // demand component
    F(at + i, n + ns + i) = 1.0;    // matching sale input
  }

  StageCost cost(Qxx, Eigen::MatrixXd::Zero(m, m), Qxu, qx, qu, 0.0, {}, F, f,
                 {}, {}, {4, 5, 6, 7});

  ControlProblem prob{n,
                      m,
                      1.0,
                      std::move(cost),
                      std::move(dyn),
                      [h_max = params.h_max, draw_tail](Rng& r) {
                        Eigen::VectorXd x(8);
                        for (Eigen::Index i = 0; i < 4; ++i)
                          x[i] = r.uniform(0.0, h_max);
                        x.tail(4) = draw_tail(r);
                        return x;
                      },
                      "supply-chain"};

  RelaxationSpec relax;
  relax.penalty_Duu = Eigen::MatrixXd::Identity(m, m);
  relax.penalty_du = Eigen::VectorXd::Constant(m, -params.u_max);
  relax.exogenous_states = {4, 5, 6, 7};
  QuadraticFunction v1 = ce_lqr_lower_bound(prob, relax);
  return BenchmarkProblem{std::move(prob), std::move(v1)};
}

}  // namespace qadp
