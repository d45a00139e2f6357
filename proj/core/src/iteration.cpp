#include "qadp/iteration.hpp"

#include <atomic>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

namespace qadp {

namespace {

void check_config(const ControlProblem& prob, const QuadraticFunction& v1,
                  const IterationConfig& c) {
  if (v1.n() != prob.n)
    throw std::invalid_argument("initial value dimension mismatch");
  if (c.iterations < 0)
    throw std::invalid_argument("iteration count must be nonnegative");
  if (c.samples < 1 || c.trajectories < 1)
    throw std::invalid_argument("need at least one sample and one trajectory");
  if (c.samples % c.trajectories != 0)
    throw std::invalid_argument("samples must split evenly across trajectories");
  if (!(c.rho > 0.0) || c.rho > 1.0)
    throw std::invalid_argument("damping must lie in (0, 1]");
  if (c.eval_steps < 1)
    throw std::invalid_argument("evaluation rollout needs at least one step");
  if (c.workers < 1)
    throw std::invalid_argument("worker count must be positive");
}

PolicyFn greedy(const QadpPolicy& pol) {
  return [&pol](const Eigen::VectorXd& x) {
    const PolicyEvalResult r = pol.evaluate(x);
    if (r.status != SolveStatus::optimal &&
        r.status != SolveStatus::inaccurate)
      throw std::runtime_error("policy evaluation failed during cost rollout");
    return r.u;
  };
}

enum class Target { gradients, values };

// Seed layout: stream 2k feeds iteration k's sampling, stream 2k+1 its
// evaluation rollout; stream 1 is the initial row's evaluation.
IterationHistory run_loop(const ControlProblem& prob,
                          const QuadraticFunction& v1,
                          const IterationConfig& c, Target target) {
  check_config(prob, v1, c);
  const Eigen::Index steps = c.samples / c.trajectories;

  IterationHistory hist;
  QuadraticFunction v = v1;
  {
    const QadpPolicy pol(prob, v);
    const AverageCost ac = average_cost(prob, greedy(pol), c.eval_steps,
                                        c.eval_burn_in, derive_seed(c.seed, 1));
    hist.records.push_back({0, 0, ac.value, ac.stderr_,
                            std::numeric_limits<double>::quiet_NaN(), v});
  }

  std::vector<Eigen::VectorXd> carry;
  for (int k = 1; k <= c.iterations; ++k) {
    const QadpPolicy pol(prob, v);
    const SampleSet ss =
        collect_samples(prob, pol, c.trajectories, steps, carry,
                        derive_seed(c.seed, 2ull * k), c.workers);
    carry = ss.final_states;

    const FitResult fit = [&] {
      if (target == Target::gradients) {
        std::vector<Eigen::VectorXd> gs(ss.evals.size());
        for (size_t i = 0; i < ss.evals.size(); ++i)
          gs[i] = ss.evals[i].gradient;
        return fit_value_gradient(ss.states, gs, c.fit);
      }
      std::vector<double> vals(ss.evals.size());
      for (size_t i = 0; i < ss.evals.size(); ++i)
        vals[i] = ss.evals[i].value;
      return fit_values(ss.states, vals, c.fit);
    }();
    if (fit.status != SolveStatus::optimal &&
        fit.status != SolveStatus::inaccurate)
      break;  // keep the history collected so far

    v = damped_combine(fit.value, v, c.rho);
    const QadpPolicy next_pol(prob, v);
    const AverageCost ac =
        average_cost(prob, greedy(next_pol), c.eval_steps, c.eval_burn_in,
                     derive_seed(c.seed, 2ull * k + 1));
    hist.records.push_back({k, static_cast<long long>(k) * c.samples,
                            ac.value, ac.stderr_, fit.loss, v});
  }
  return hist;
}

}  // namespace

SampleSet collect_samples(const ControlProblem& prob, const QadpPolicy& policy,
                          Eigen::Index trajectories, Eigen::Index steps,
                          const std::vector<Eigen::VectorXd>& carry,
                          std::uint64_t seed, int workers) {
  if (trajectories < 1 || steps < 1)
    throw std::invalid_argument("need at least one trajectory and one step");
  if (!carry.empty() &&
      static_cast<Eigen::Index>(carry.size()) != trajectories)
    throw std::invalid_argument("carry must hold one state per trajectory");

  SampleSet out;
  out.states.resize(trajectories * steps);
  out.evals.resize(trajectories * steps);
  out.final_states.resize(trajectories);

  std::exception_ptr err;
  std::mutex err_mu;
  auto rollout = [&](Eigen::Index j) {
    try {
      Rng rng(derive_seed(seed, j));
      Eigen::VectorXd x = carry.empty() ? prob.initial_state(rng) : carry[j];
      if (x.size() != prob.n)
        throw std::invalid_argument("start state has wrong dimension");
      for (Eigen::Index t = 0; t < steps; ++t) {
        PolicyEvalResult r = policy.evaluate(x);
        if (r.status != SolveStatus::optimal &&
            r.status != SolveStatus::inaccurate)
          throw SimulationError("policy has no feasible input at a visited state",
                                t, x);
        const DynamicsDraw d = prob.dynamics.sampler(rng);
        Eigen::VectorXd next = d.A * x + d.B * r.u + d.c;
        out.states[j * steps + t] = std::move(x);
        out.evals[j * steps + t] = std::move(r);
        x = std::move(next);
      }
      out.final_states[j] = std::move(x);
    } catch (...) {
      const std::lock_guard<std::mutex> g(err_mu);
      if (!err) err = std::current_exception();
    }
  };

  const int pool_size =
      static_cast<int>(std::min<Eigen::Index>(workers, trajectories));
  if (pool_size <= 1) {
    for (Eigen::Index j = 0; j < trajectories; ++j) rollout(j);
  } else {
    std::atomic<Eigen::Index> next{0};
    std::vector<std::thread> pool;
    pool.reserve(pool_size);
    for (int w = 0; w < pool_size; ++w)
      pool.emplace_back([&] {
        for (Eigen::Index j = next++; j < trajectories; j = next++)
          rollout(j);
      });
    for (std::thread& th : pool) th.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

IterationHistory run_vgi(const ControlProblem& prob,
                         const QuadraticFunction& v1,
                         const IterationConfig& config) {
  return run_loop(prob, v1, config, Target::gradients);
}

IterationHistory run_fvi(const ControlProblem& prob,
                         const QuadraticFunction& v1,
                         const IterationConfig& config) {
  return run_loop(prob, v1, config, Target::values);
}

}  // namespace qadp
