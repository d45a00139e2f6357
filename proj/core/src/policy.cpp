#include "qadp/policy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace qadp {

namespace {

// Pinned Bellman program over (xt, u, t_1..t_K): xt is a copy of the state
// held at the query point by the leading n equality rows, so the gradient of
// the optimal value in x is minus the dual of exactly those rows. The t_k
// are epigraph variables for the hinge terms, entering the objective with
// coefficient one.
ConicProgram pinned_bellman_program(const StageCost& cost, double gamma,
                                    const ExpectedJointQuadratic& ev,
                                    const Eigen::VectorXd& x) {
  const Eigen::Index n = cost.n(), m = cost.m();
  const Eigen::Index K = static_cast<Eigen::Index>(cost.pwl().size());
  const Eigen::Index nv = n + m + K;

  // exogenous coordinates are pinned like every other state, but their cost
  // couplings are folded into linear terms using the pinned values; the cost
  // is only convex jointly in (endogenous, u), so leaving them quadratic
  // would make the assembled Q indefinite
  Eigen::MatrixXd Qxx = cost.Qxx();
  Eigen::MatrixXd Qxu = cost.Qxu();
  Eigen::VectorXd xe = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i : cost.exogenous_states()) {
    xe[i] = x[i];
    Qxx.row(i).setZero();
    Qxu.row(i).setZero();
  }
  for (Eigen::Index i : cost.exogenous_states()) Qxx.col(i).setZero();

  ConicProgram prog;
  prog.nvar = nv;
  // stage quadratic carries no 1/2, the solver convention does
  prog.Q = Eigen::MatrixXd::Zero(nv, nv);
  prog.Q.topLeftCorner(n, n) = 2 * Qxx + gamma * ev.Hxx;
  prog.Q.block(0, n, n, m) = 2 * Qxu + gamma * ev.Hxu;
  prog.Q.block(n, 0, m, n) = prog.Q.block(0, n, n, m).transpose();
  prog.Q.block(n, n, m, m) = 2 * cost.Quu() + gamma * ev.Huu;
  prog.q = Eigen::VectorXd::Ones(nv);
  prog.q.head(n) = cost.qx() + gamma * ev.hx;
  prog.q.segment(n, m) = cost.qu() + gamma * ev.hu;
  prog.r0 = cost.q0() + gamma * ev.h0;
  if (!cost.exogenous_states().empty()) {
    Eigen::VectorXd refund = 2.0 * (cost.Qxx() * xe);
    for (Eigen::Index i : cost.exogenous_states()) refund[i] = 0.0;
    prog.q.head(n) += refund;
    prog.q.segment(n, m) += 2.0 * (cost.Qxu().transpose() * xe);
    prog.r0 += xe.dot(cost.Qxx() * xe);
  }

  const Eigen::Index p_eq = cost.F_eq().rows();
  prog.A = Eigen::MatrixXd::Zero(n + p_eq, nv);
  prog.A.topLeftCorner(n, n).setIdentity();
  if (p_eq > 0) prog.A.block(n, 0, p_eq, n + m) = cost.F_eq();
  prog.b.resize(n + p_eq);
  prog.b.head(n) = x;
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
  return prog;
}

}  // namespace

QadpPolicy::QadpPolicy(const ControlProblem& prob, QuadraticFunction v,
                       ConicSolverOptions solver_opts)
    : cost_(prob.cost),
      gamma_(prob.gamma),
      v_(std::move(v)),
      ev_(expected_joint_quadratic(v_, prob.dynamics.moments)),
      solver_opts_(solver_opts) {
  if (v_.n() != prob.n)
    throw std::invalid_argument(
        "value function dimension does not match the problem state");
}

PolicyEvalResult QadpPolicy::evaluate(const Eigen::VectorXd& x) const {
  const Eigen::Index n = cost_.n(), m = cost_.m();
  if (x.size() != n) throw std::invalid_argument("state dimension mismatch");
  const ConicSolution sol =
      solve_conic(pinned_bellman_program(cost_, gamma_, ev_, x), solver_opts_);
  PolicyEvalResult r;
  r.status = sol.status;
  if (sol.status == SolveStatus::optimal ||
      sol.status == SolveStatus::inaccurate) {
    r.u = sol.x.segment(n, m);
    r.value = sol.objective;
    r.gradient = -sol.y.head(n);
    // the folded exogenous couplings carry part of the sensitivity that the
    // pinning duals no longer see
    for (Eigen::Index i : cost_.exogenous_states())
      r.gradient[i] += 2.0 * (cost_.Qxx().row(i).dot(x) +
                              cost_.Qxu().row(i).dot(r.u));
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.u = Eigen::VectorXd::Constant(m, nan);
    r.value = nan;
    r.gradient = Eigen::VectorXd::Constant(n, nan);
  }
  return r;
}

PolicyEvalResult qadp_evaluate(const ControlProblem& prob,
                               const QuadraticFunction& v,
                               const Eigen::VectorXd& x) {
  return QadpPolicy(prob, v).evaluate(x);
}

BellmanImage bellman_apply(const ControlProblem& prob,
                           const QuadraticFunction& v,
                           const Eigen::VectorXd& x) {
  PolicyEvalResult r = qadp_evaluate(prob, v, x);
  if (r.status != SolveStatus::optimal &&
      r.status != SolveStatus::inaccurate)
    throw std::runtime_error(std::string("Bellman solve failed: ") +
                             to_string(r.status));
  return BellmanImage{r.value, std::move(r.gradient)};
}

SimulationResult simulate(const ControlProblem& prob, const PolicyFn& policy,
                          const Eigen::VectorXd& x0, Eigen::Index steps,
                          std::uint64_t seed) {
  const Eigen::Index n = prob.n, m = prob.m;
  if (x0.size() != n) throw std::invalid_argument("x0 dimension mismatch");
  if (steps < 1) throw std::invalid_argument("steps must be positive");

  Rng rng(seed);
  SimulationResult out;
  out.states.resize(steps + 1, n);
  out.inputs.resize(steps, m);
  out.costs.resize(steps);

  Eigen::VectorXd x = x0;
  for (Eigen::Index t = 0; t < steps; ++t) {
    out.states.row(t) = x.transpose();
    const Eigen::VectorXd u = policy(x);
    if (u.size() != m)
      throw std::invalid_argument("policy returned an input of wrong size");
    const auto g = prob.cost.eval(x, u);
    if (!g)
      throw SimulationError("rollout left the feasible set", t, x);
    out.inputs.row(t) = u.transpose();
    out.costs[t] = *g;
    const DynamicsDraw d = prob.dynamics.sampler(rng);
    x = d.A * x + d.B * u + d.c;
  }
  out.states.row(steps) = x.transpose();
  return out;
}

AverageCost average_cost(const ControlProblem& prob, const PolicyFn& policy,
                         Eigen::Index steps, Eigen::Index burn_in,
                         std::uint64_t seed) {
  if (burn_in < 0) burn_in = steps / 10;
  if (burn_in >= steps)
    throw std::invalid_argument("burn_in leaves no steps to average");

  Rng init_rng(derive_seed(seed, 0));
  const Eigen::VectorXd x0 = prob.initial_state(init_rng);
  const SimulationResult roll =
      simulate(prob, policy, x0, steps, derive_seed(seed, 1));

  const Eigen::Index kept = steps - burn_in;
  const auto costs = roll.costs.tail(kept);

  AverageCost out;
  out.steps = steps;
  out.burn_in = burn_in;
  out.value = costs.mean();

  // batch-means standard error; batches partition the kept steps
  const Eigen::Index nb = std::min<Eigen::Index>(20, kept);
  Eigen::VectorXd means(nb);
  for (Eigen::Index k = 0; k < nb; ++k) {
    const Eigen::Index lo = k * kept / nb;
    const Eigen::Index hi = (k + 1) * kept / nb;
    means[k] = costs.segment(lo, hi - lo).mean();
  }
  if (nb > 1) {
    const double var =
        (means.array() - means.mean()).square().sum() / (nb - 1);
    out.stderr_ = std::sqrt(var / nb);
  }
  return out;
}

}  // namespace qadp
