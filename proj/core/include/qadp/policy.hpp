#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "qadp/conic.hpp"
#include "qadp/model.hpp"

namespace qadp {

struct PolicyEvalResult {
  Eigen::VectorXd u;
  double value = 0.0;            // (T V)(x)
  Eigen::VectorXd gradient;      // d(T V)/dx, the negated pinning dual
  SolveStatus status = SolveStatus::inaccurate;
};

/// Greedy policy for a quadratic approximate value function: evaluating at x
/// solves the Bellman problem with the state pinned through an auxiliary
/// variable, so one conic solve yields the input, the value T V(x), and its
/// gradient (the negated optimal dual of the pinning constraint).
///
/// The expectation blocks are contracted once at construction; per-state
/// work is one small QP.
class QadpPolicy {
 public:
  QadpPolicy(const ControlProblem& prob, QuadraticFunction v,
             ConicSolverOptions solver_opts = {});

  PolicyEvalResult evaluate(const Eigen::VectorXd& x) const;

  const QuadraticFunction& value_function() const { return v_; }

 private:
  StageCost cost_;
  double gamma_;
  QuadraticFunction v_;
  ExpectedJointQuadratic ev_;
  ConicSolverOptions solver_opts_;
};

/// One-off pinned Bellman solve; prefer QadpPolicy for repeated states.
PolicyEvalResult qadp_evaluate(const ControlProblem& prob,
                               const QuadraticFunction& v,
                               const Eigen::VectorXd& x);

struct BellmanImage {
  double value;
  Eigen::VectorXd gradient;
};

/// (T V)(x) and its gradient.
BellmanImage bellman_apply(const ControlProblem& prob,
                           const QuadraticFunction& v,
                           const Eigen::VectorXd& x);

using PolicyFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Thrown when a closed-loop rollout hits a state where the policy has no
/// feasible input.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(std::string msg, Eigen::Index step, Eigen::VectorXd state)
      : std::runtime_error(std::move(msg)), step(step), state(std::move(state)) {}
  Eigen::Index step;
  Eigen::VectorXd state;
};

struct SimulationResult {
  Eigen::MatrixXd states;  // (steps + 1) x n
  Eigen::MatrixXd inputs;  // steps x m
  Eigen::VectorXd costs;   // steps
};

/// Closed-loop rollout of `steps` transitions from x0 under seeded dynamics
/// draws. Same seed, same trajectory.
SimulationResult simulate(const ControlProblem& prob, const PolicyFn& policy,
                          const Eigen::VectorXd& x0, Eigen::Index steps,
                          std::uint64_t seed);

struct AverageCost {
  double value = 0.0;
  double stderr_ = 0.0;
  Eigen::Index steps = 0;
  Eigen::Index burn_in = 0;
};

/// Long-run average stage cost from a single rollout started at a draw of
/// the problem's initial-state distribution. burn_in < 0 means 10% of steps.
/// The standard error comes from 20 batch means over the kept steps.
AverageCost average_cost(const ControlProblem& prob, const PolicyFn& policy,
                         Eigen::Index steps, Eigen::Index burn_in,
                         std::uint64_t seed);

}  // namespace qadp
