#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "qadp/conic.hpp"
#include "qadp/model.hpp"
#include "qadp/quadratic.hpp"

namespace qadp {

struct LqrOptions {
  double tol = 1e-11;     // on the iterate change, infinity norm
  int max_iter = 100000;
  double diverge_norm = 1e9;
};

struct LqrResult {
  // gamma = 1: the relative value function, constant pinned to zero
  QuadraticFunction v = QuadraticFunction::zero(0);
  double rate = 0.0;  // per-sweep constant drop at the fixed point; 0 discounted
  int iterations = 0;
};

/// Value iteration for the deterministic problem x+ = Ax + Bu + c with an
/// unconstrained jointly-quadratic stage cost. gamma = 1 iterates the
/// relative value function (constant renormalized each sweep). Throws on a
/// constrained cost or divergence.
LqrResult lqr_value_iteration(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Eigen::VectorXd& c, const StageCost& cost,
                              double gamma = 1.0, const LqrOptions& opts = {});

struct SsoResult {
  Eigen::VectorXd z;  // steady state
  Eigen::VectorXd v;  // steady input
  double cost = 0.0;
  SolveStatus status = SolveStatus::inaccurate;
};

/// Certainty-equivalent steady-state optimization:
/// minimize g(z, v) subject to z = Abar z + Bbar v + cbar.
SsoResult ce_sso(const StageCost& cost, const Eigen::MatrixXd& Abar,
                 const Eigen::MatrixXd& Bbar, const Eigen::VectorXd& cbar);
SsoResult ce_sso(const ControlProblem& prob);

/// How to strip a constrained problem down to an unconstrained quadratic one
/// for the certainty-equivalent LQR lower bound. Exogenous state components
/// (must be unaffected by endogenous state and input) are fixed at their CE
/// stationary values inside the cost; the recursion runs on the rest and the
/// result embeds with zero rows/columns on the exogenous block.
struct RelaxationSpec {
  bool drop_inequalities = true;
  bool drop_equalities = true;
  bool drop_pwl = false;  // PWL terms are not quadratic; true drops them
  // added to the stage cost: u'Duu u + du'u (pointwise under-estimator of
  // whatever constraint it replaces)
  std::optional<Eigen::MatrixXd> penalty_Duu;
  std::optional<Eigen::VectorXd> penalty_du;
  std::vector<Eigen::Index> exogenous_states;
};

/// Quadratic lower bound on the optimal value function via the
/// certainty-equivalent LQR of the relaxed problem (valid up to an additive
/// constant; constants are dropped in the average-cost setting).
QuadraticFunction ce_lqr_lower_bound(const ControlProblem& prob,
                                     const RelaxationSpec& relax,
                                     const LqrOptions& opts = {});

struct MpcResult {
  Eigen::VectorXd u;        // first planned input
  Eigen::MatrixXd plan;     // all planned inputs, horizon rows
  double objective = 0.0;   // plan cost per stage (terminal value included)
  SolveStatus status = SolveStatus::inaccurate;
};

/// Certainty-equivalent receding-horizon policy: plans H stages over the
/// mean dynamics from the current state, applies the first input. Optional
/// quadratic terminal value; the plan objective is sum of stage costs plus
/// the terminal value at the final planned state.
class CeMpcPolicy {
 public:
  CeMpcPolicy(const ControlProblem& prob, Eigen::Index horizon,
              std::optional<QuadraticFunction> terminal = std::nullopt,
              ConicSolverOptions solver_opts = {});

  MpcResult evaluate(const Eigen::VectorXd& x) const;

  Eigen::Index horizon() const { return horizon_; }

 private:
  StageCost cost_;
  Eigen::Index horizon_;
  std::optional<QuadraticFunction> terminal_;
  ConicSolverOptions solver_opts_;
  // condensed prediction: z_tau = phi_[tau] x + Gamma_[tau] (v_1..v_H) + psi_[tau]
  std::vector<Eigen::MatrixXd> phi_;
  std::vector<Eigen::MatrixXd> gamma_mats_;
  std::vector<Eigen::VectorXd> psi_;
};

MpcResult ce_mpc_evaluate(const ControlProblem& prob, Eigen::Index horizon,
                          const std::optional<QuadraticFunction>& terminal,
                          const Eigen::VectorXd& x);

}  // namespace qadp
