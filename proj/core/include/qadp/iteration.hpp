#pragma once

#include <cstdint>
#include <vector>

#include "qadp/fitting.hpp"
#include "qadp/model.hpp"
#include "qadp/policy.hpp"

namespace qadp {

struct IterationConfig {
  int iterations = 20;
  Eigen::Index samples = 50;       // N per iteration
  Eigen::Index trajectories = 1;   // K; N/K steps per rollout, N % K == 0
  double rho = 0.5;                // damping on the fitted update
  FitOptions fit;
  Eigen::Index eval_steps = 10000; // per-iteration average-cost rollout length
  Eigen::Index eval_burn_in = -1;  // -1 means 10% of eval_steps
  std::uint64_t seed = 0;
  int workers = 1;
};

struct IterationRecord {
  int iteration = 0;
  long long policy_evals = 0;  // cumulative Bellman solves used for samples
  double avg_cost = 0.0;
  double avg_cost_stderr = 0.0;
  double fit_residual = 0.0;   // fit loss; NaN on the initial row
  QuadraticFunction value;
};

struct IterationHistory {
  std::vector<IterationRecord> records;
  const QuadraticFunction& final_value() const { return records.back().value; }
};

/// States visited by K seeded rollouts under one policy, together with the
/// Bellman solve at each state (input, value, gradient). The rollout reuses
/// that solve to step, so each state costs exactly one policy evaluation.
struct SampleSet {
  std::vector<Eigen::VectorXd> states;
  std::vector<PolicyEvalResult> evals;
  std::vector<Eigen::VectorXd> final_states;  // rollout ends, K entries
};

/// carry: rollout start states from the previous iteration (terminal states);
/// empty means draw fresh from the problem's initial-state distribution.
/// Trajectories get seeds derived from (seed, trajectory index), so `workers`
/// changes scheduling only, never results.
SampleSet collect_samples(const ControlProblem& prob, const QadpPolicy& policy,
                          Eigen::Index trajectories, Eigen::Index steps,
                          const std::vector<Eigen::VectorXd>& carry,
                          std::uint64_t seed, int workers = 1);

/// Value-gradient iteration: fit an affine model to Bellman gradients at
/// visited states, damp, repeat. Returns one record per iteration plus the
/// initial row.
IterationHistory run_vgi(const ControlProblem& prob,
                         const QuadraticFunction& v1,
                         const IterationConfig& config);

/// Fitted value iteration on Bellman values with a free constant offset.
IterationHistory run_fvi(const ControlProblem& prob,
                         const QuadraticFunction& v1,
                         const IterationConfig& config);

}  // namespace qadp
