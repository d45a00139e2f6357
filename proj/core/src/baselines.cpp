#include "qadp/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qadp {

namespace {

double inf_norm(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// stage cost + optional terminal value assembled over an affine map
// (z, v) = W y + offset into the decision vector y; accumulates onto a
// conic program in the solver's 1/2 y'Qy convention
void accumulate_stage(ConicProgram& prog, const StageCost& g,
                      const Eigen::MatrixXd& W, const Eigen::VectorXd& off) {
  const Eigen::Index n = g.n(), m = g.m();
  Eigen::MatrixXd Qj(n + m, n + m);
  Qj.topLeftCorner(n, n) = g.Qxx();
  Qj.topRightCorner(n, m) = g.Qxu();
  Qj.bottomLeftCorner(m, n) = g.Qxu().transpose();
  Qj.bottomRightCorner(m, m) = g.Quu();
  Eigen::VectorXd lin(n + m);
  lin.head(n) = g.qx();
  lin.tail(m) = g.qu();
  prog.Q += 2.0 * W.transpose() * Qj * W;
  prog.q += W.transpose() * (2.0 * Qj * off + lin);
  prog.r0 += off.dot(Qj * off) + lin.dot(off) + g.q0();
}

}  // namespace

LqrResult lqr_value_iteration(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Eigen::VectorXd& c, const StageCost& cost,
                              double gamma, const LqrOptions& opts) {
  const Eigen::Index n = A.rows(), m = B.cols();
  if (A.cols() != n || B.rows() != n || c.size() != n || cost.n() != n ||
      cost.m() != m)
    throw std::invalid_argument("dimension mismatch in value iteration");
  if (!cost.unconstrained() || !cost.pwl().empty())
    throw std::invalid_argument(
        "value iteration needs an unconstrained quadratic stage cost");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("discount factor must lie in (0, 1]");

  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  double pi = 0.0, rate = 0.0;
  LqrResult out;
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    const Eigen::MatrixXd Huu = 2.0 * cost.Quu() + gamma * B.transpose() * P * B;
    Eigen::LLT<Eigen::MatrixXd> llt(Huu);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error(
          "input cost block is not positive definite along the sweep");
    const Eigen::MatrixXd Hxu = 2.0 * cost.Qxu() + gamma * A.transpose() * P * B;
    const Eigen::VectorXd pc = P * c + p;
    const Eigen::VectorXd hx = cost.qx() + gamma * A.transpose() * pc;
    const Eigen::VectorXd hu = cost.qu() + gamma * B.transpose() * pc;
    const Eigen::MatrixXd gain = llt.solve(Hxu.transpose());  // Huu^{-1} Hxu'
    Eigen::MatrixXd Pn =
        2.0 * cost.Qxx() + gamma * A.transpose() * P * A - Hxu * gain;
    Pn = 0.5 * (Pn + Pn.transpose());
    const Eigen::VectorXd pn = hx - Hxu * llt.solve(hu);
    const double drop = cost.q0() + gamma * (0.5 * c.dot(P * c) + p.dot(c) + pi) -
                        0.5 * hu.dot(llt.solve(hu));
    const double diff =
        std::max(inf_norm(Pn - P), (pn - p).cwiseAbs().maxCoeff());
    P = Pn;
    p = pn;
    rate = drop;
    if (inf_norm(P) > opts.diverge_norm)
      throw std::runtime_error(
          "value iteration diverged; the instance may be unstabilizable");
    if (diff <= opts.tol) {
      out.iterations = iter;
      if (gamma < 1.0) {
        // drop = C + gamma pi with C read off the converged sweep; settle
        // the constant at its fixed point instead of iterating it out
        pi = (drop - gamma * pi) / (1.0 - gamma);
      }
      out.v = QuadraticFunction(P, p, gamma < 1.0 ? pi : 0.0);
      out.rate = gamma < 1.0 ? 0.0 : rate;
      return out;
    }
    if (gamma < 1.0) pi = drop;  // average-cost sweeps renormalize instead
  }
  throw std::runtime_error("value iteration did not settle within the budget");
}

SsoResult ce_sso(const StageCost& cost, const Eigen::MatrixXd& Abar,
                 const Eigen::MatrixXd& Bbar, const Eigen::VectorXd& cbar) {
  const Eigen::Index n = cost.n(), m = cost.m();
  if (Abar.rows() != n || Abar.cols() != n || Bbar.rows() != n ||
      Bbar.cols() != m || cbar.size() != n)
    throw std::invalid_argument("dimension mismatch in steady-state solve");
  const Eigen::Index K = static_cast<Eigen::Index>(cost.pwl().size());
  const Eigen::Index nv = n + m + K;

  ConicProgram prog;
  prog.nvar = nv;
  prog.Q = Eigen::MatrixXd::Zero(nv, nv);
  prog.q = Eigen::VectorXd::Ones(nv);  // epigraph variables keep weight one
  prog.q.head(n + m).setZero();
  prog.r0 = 0.0;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n + m, nv);
  W.topLeftCorner(n + m, n + m).setIdentity();
  accumulate_stage(prog, cost, W, Eigen::VectorXd::Zero(n + m));

  const Eigen::Index p_eq = cost.F_eq().rows();
  prog.A = Eigen::MatrixXd::Zero(n + p_eq, nv);
  prog.A.topLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n) - Abar;
  prog.A.block(0, n, n, m) = -Bbar;
  if (p_eq > 0) prog.A.block(n, 0, p_eq, n + m) = cost.F_eq();
  prog.b.resize(n + p_eq);
  prog.b.head(n) = cbar;
  prog.b.tail(p_eq) = cost.f_eq();

  const Eigen::Index p_in = cost.F_in().rows();
  const Eigen::Index rows = p_in + 2 * K;
  prog.G = Eigen::MatrixXd::Zero(rows, nv);
  prog.h = Eigen::VectorXd::Zero(rows);
  if (p_in > 0) {
    prog.G.topLeftCorner(p_in, n + m) = cost.F_in();
    prog.h.head(p_in) = cost.f_in();
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& term = cost.pwl()[static_cast<std::size_t>(k)];
    prog.G(p_in + 2 * k, n + m + k) = -1.0;
    prog.G.row(p_in + 2 * k + 1).head(n + m) = term.f.transpose();
    prog.G(p_in + 2 * k + 1, n + m + k) = -1.0;
    prog.h[p_in + 2 * k + 1] = -term.b;
  }
  prog.cones.orthant = rows;

  const ConicSolution sol = solve_conic(prog, {});
  SsoResult r;
  r.status = sol.status;
  if (sol.status == SolveStatus::optimal ||
      sol.status == SolveStatus::inaccurate) {
    r.z = sol.x.head(n);
    r.v = sol.x.segment(n, m);
    r.cost = sol.objective;
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.z = Eigen::VectorXd::Constant(n, nan);
    r.v = Eigen::VectorXd::Constant(m, nan);
    r.cost = nan;
  }
  return r;
}

SsoResult ce_sso(const ControlProblem& prob) {
  const auto& mom = prob.dynamics.moments;
  return ce_sso(prob.cost, mom.Abar(), mom.Bbar(), mom.cbar());
}

QuadraticFunction ce_lqr_lower_bound(const ControlProblem& prob,
                                     const RelaxationSpec& relax,
                                     const LqrOptions& opts) {
  const StageCost& g = prob.cost;
  const Eigen::Index n = g.n(), m = g.m();
  if (g.F_in().rows() > 0 && !relax.drop_inequalities)
    throw std::invalid_argument("inequalities present but not dropped");
  if (g.F_eq().rows() > 0 && !relax.drop_equalities)
    throw std::invalid_argument("equalities present but not dropped");
  if (!g.pwl().empty() && !relax.drop_pwl)
    throw std::invalid_argument("hinge terms present but not dropped");

  Eigen::MatrixXd Quu = g.Quu();
  Eigen::VectorXd qu = g.qu();
  if (relax.penalty_Duu) {
    if (relax.penalty_Duu->rows() != m || relax.penalty_Duu->cols() != m)
      throw std::invalid_argument("penalty dimension mismatch");
    Quu += *relax.penalty_Duu;
  }
  if (relax.penalty_du) {
    if (relax.penalty_du->size() != m)
      throw std::invalid_argument("penalty dimension mismatch");
    qu += *relax.penalty_du;
  }

  const auto& mom = prob.dynamics.moments;
  std::vector<Eigen::Index> exo = relax.exogenous_states;
  std::sort(exo.begin(), exo.end());
  if (exo.empty()) {
    auto r = lqr_value_iteration(
        mom.Abar(), mom.Bbar(), mom.cbar(),
        StageCost::quadratic(g.Qxx(), Quu, g.Qxu(), g.qx(), qu, g.q0()),
        prob.gamma, opts);
    return r.v;
  }

  std::vector<Eigen::Index> endo;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!std::binary_search(exo.begin(), exo.end(), i)) endo.push_back(i);
  const Eigen::Index ne = static_cast<Eigen::Index>(endo.size());
  const Eigen::Index nx = static_cast<Eigen::Index>(exo.size());

  // the frozen block must evolve on its own, otherwise fixing it at a
  // stationary value is not certainty-equivalent
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ne; ++j)
      if (mom.Abar()(exo[i], endo[j]) != 0.0)
        throw std::invalid_argument(
            "exogenous states must not depend on endogenous ones");
    for (Eigen::Index j = 0; j < m; ++j)
      if (mom.Bbar()(exo[i], j) != 0.0)
        throw std::invalid_argument("exogenous states must ignore the input");
  }

  Eigen::MatrixXd Aee(nx, nx);
  Eigen::VectorXd ce(nx);
  for (Eigen::Index i = 0; i < nx; ++i) {
    ce[i] = mom.cbar()[exo[i]];
    for (Eigen::Index j = 0; j < nx; ++j)
      Aee(i, j) = mom.Abar()(exo[i], exo[j]);
  }
  const Eigen::MatrixXd Ie = Eigen::MatrixXd::Identity(nx, nx);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Ie - Aee);
  if (!lu.isInvertible())
    throw std::invalid_argument("exogenous block has no stationary mean");
  const Eigen::VectorXd xbar = lu.solve(ce);

  Eigen::MatrixXd Ar(ne, ne), Br(ne, m), Qxx_r(ne, ne), Qxu_r(ne, m);
  Eigen::VectorXd cr(ne), qx_r(ne);
  for (Eigen::Index i = 0; i < ne; ++i) {
    cr[i] = mom.cbar()[endo[i]];
    qx_r[i] = g.qx()[endo[i]];
    for (Eigen::Index j = 0; j < ne; ++j) {
      Ar(i, j) = mom.Abar()(endo[i], endo[j]);
      Qxx_r(i, j) = g.Qxx()(endo[i], endo[j]);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      Br(i, j) = mom.Bbar()(endo[i], j);
      Qxu_r(i, j) = g.Qxu()(endo[i], j);
    }
    for (Eigen::Index j = 0; j < nx; ++j) {
      cr[i] += mom.Abar()(endo[i], exo[j]) * xbar[j];
      qx_r[i] += 2.0 * g.Qxx()(endo[i], exo[j]) * xbar[j];
    }
  }
  Eigen::VectorXd qu_r = qu;
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < nx; ++i)
      qu_r[j] += 2.0 * g.Qxu()(exo[i], j) * xbar[i];
  double q0_r = g.q0();
  for (Eigen::Index i = 0; i < nx; ++i) {
    q0_r += g.qx()[exo[i]] * xbar[i];
    for (Eigen::Index j = 0; j < nx; ++j)
      q0_r += xbar[i] * g.Qxx()(exo[i], exo[j]) * xbar[j];
  }

  auto r = lqr_value_iteration(
      Ar, Br, cr,
      StageCost::quadratic(Qxx_r, Quu, Qxu_r, qx_r, qu_r, q0_r), prob.gamma,
      opts);

  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < ne; ++i) {
    p[endo[i]] = r.v.p()[i];
    for (Eigen::Index j = 0; j < ne; ++j)
      P(endo[i], endo[j]) = r.v.P()(i, j);
  }
  return QuadraticFunction(P, p, r.v.pi());
}

CeMpcPolicy::CeMpcPolicy(const ControlProblem& prob, Eigen::Index horizon,
                         std::optional<QuadraticFunction> terminal,
                         ConicSolverOptions solver_opts)
    : cost_(prob.cost),
      horizon_(horizon),
      terminal_(std::move(terminal)),
      solver_opts_(solver_opts) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (terminal_ && terminal_->n() != prob.n)
    throw std::invalid_argument("terminal value dimension mismatch");
  const auto& mom = prob.dynamics.moments;
  const Eigen::Index n = prob.n, m = prob.m;
  const Eigen::Index HV = horizon * m;
  phi_.resize(static_cast<std::size_t>(horizon) + 1);
  gamma_mats_.resize(static_cast<std::size_t>(horizon) + 1);
  psi_.resize(static_cast<std::size_t>(horizon) + 1);
  phi_[0] = Eigen::MatrixXd::Identity(n, n);
  gamma_mats_[0] = Eigen::MatrixXd::Zero(n, HV);
  psi_[0] = Eigen::VectorXd::Zero(n);
  for (Eigen::Index t = 0; t < horizon; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    phi_[ts + 1] = mom.Abar() * phi_[ts];
    gamma_mats_[ts + 1] = mom.Abar() * gamma_mats_[ts];
    gamma_mats_[ts + 1].middleCols(t * m, m) += mom.Bbar();
    psi_[ts + 1] = mom.Abar() * psi_[ts] + mom.cbar();
  }
}

MpcResult CeMpcPolicy::evaluate(const Eigen::VectorXd& x) const {
  const Eigen::Index n = cost_.n(), m = cost_.m();
  if (x.size() != n) throw std::invalid_argument("state dimension mismatch");
  const Eigen::Index H = horizon_;
  const Eigen::Index K = static_cast<Eigen::Index>(cost_.pwl().size());
  const Eigen::Index HV = H * m;
  const Eigen::Index nv = HV + H * K;

  ConicProgram prog;
  prog.nvar = nv;
  prog.Q = Eigen::MatrixXd::Zero(nv, nv);
  prog.q = Eigen::VectorXd::Ones(nv);  // epigraph variables keep weight one
  prog.q.head(HV).setZero();
  prog.r0 = 0.0;

  const Eigen::Index p_eq = cost_.F_eq().rows();
  const Eigen::Index p_in = cost_.F_in().rows();
  prog.A = Eigen::MatrixXd::Zero(H * p_eq, nv);
  prog.b.resize(H * p_eq);
  const Eigen::Index in_rows = H * (p_in + 2 * K);
  prog.G = Eigen::MatrixXd::Zero(in_rows, nv);
  prog.h.resize(in_rows);

  Eigen::MatrixXd W(n + m, nv);
  Eigen::VectorXd off(n + m);
  Eigen::Index grow = 0;
  for (Eigen::Index t = 0; t < H; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    W.setZero();
    W.topLeftCorner(n, HV) = gamma_mats_[ts];
    W.block(n, t * m, m, m).setIdentity();
    off.head(n) = phi_[ts] * x + psi_[ts];
    off.tail(m).setZero();
    accumulate_stage(prog, cost_, W, off);
    if (p_eq > 0) {
      prog.A.middleRows(t * p_eq, p_eq) = cost_.F_eq() * W;
      prog.b.segment(t * p_eq, p_eq) = cost_.f_eq() - cost_.F_eq() * off;
    }
    if (p_in > 0) {
      prog.G.middleRows(grow, p_in) = cost_.F_in() * W;
      prog.h.segment(grow, p_in) = cost_.f_in() - cost_.F_in() * off;
      grow += p_in;
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      const auto& term = cost_.pwl()[static_cast<std::size_t>(k)];
      const Eigen::Index tcol = HV + t * K + k;
      prog.G(grow, tcol) = -1.0;
      prog.h[grow++] = 0.0;
      prog.G.row(grow).head(nv) = term.f.transpose() * W;
      prog.G(grow, tcol) -= 1.0;
      prog.h[grow++] = -term.b - term.f.dot(off);
    }
  }
  if (terminal_) {
    const auto hs = static_cast<std::size_t>(H);
    const Eigen::MatrixXd& Gz = gamma_mats_[hs];
    const Eigen::VectorXd r = phi_[hs] * x + psi_[hs];
    prog.Q += Gz.transpose() * terminal_->P() * Gz;
    prog.q += Gz.transpose() * (terminal_->P() * r + terminal_->p());
    prog.r0 += terminal_->eval(r);
  }
  prog.cones.orthant = in_rows;

  const ConicSolution sol = solve_conic(prog, solver_opts_);
  MpcResult out;
  out.status = sol.status;
  if (sol.status == SolveStatus::optimal ||
      sol.status == SolveStatus::inaccurate) {
    out.u = sol.x.head(m);
    out.plan.resize(H, m);
    for (Eigen::Index t = 0; t < H; ++t)
      out.plan.row(t) = sol.x.segment(t * m, m).transpose();
    out.objective = sol.objective / static_cast<double>(H + 1);
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.u = Eigen::VectorXd::Constant(m, nan);
    out.plan = Eigen::MatrixXd::Constant(H, m, nan);
    out.objective = nan;
  }
  return out;
}

MpcResult ce_mpc_evaluate(const ControlProblem& prob, Eigen::Index horizon,
                          const std::optional<QuadraticFunction>& terminal,
                          const Eigen::VectorXd& x) {
  return CeMpcPolicy(prob, horizon, terminal).evaluate(x);
}

}  // namespace qadp
