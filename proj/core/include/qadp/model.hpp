#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qadp/moments.hpp"
#include "qadp/quadratic.hpp"
#include "qadp/rng.hpp"

namespace qadp {

/// One hinge term max(0, f'(x,u) + b) of a stage cost.
struct PwlTerm {
  Eigen::VectorXd f;  // length n + m, acts on the concatenated (x, u)
  double b = 0.0;
};

/// Extended-value convex stage cost
///
///   g(x, u) = (x,u)' [[Qxx, Qxu],[Qxu', Quu]] (x,u) + qx'x + qu'u + q0
///             + sum_k max(0, f_k'(x,u) + b_k)
///             + indicator{ F_in (x,u) <= f_in, F_eq (x,u) = f_eq }.
///
/// Note the quadratic block enters without a 1/2, so g = x'Qx + u'Ru is
/// expressed by Qxx = Q, Quu = R directly.
///
/// Qxx and Quu must each be PSD. Joint convexity of the quadratic block is
/// required over (endogenous states, inputs): state indices listed in
/// `exogenous_states` are treated as externally re-randomized parameters
/// (prices, demands) and may couple to u through Qxu without making the
/// problem nonconvex in the decision variables.
class StageCost {
 public:
  StageCost(Eigen::MatrixXd Qxx, Eigen::MatrixXd Quu, Eigen::MatrixXd Qxu,
            Eigen::VectorXd qx, Eigen::VectorXd qu, double q0,
            std::vector<PwlTerm> pwl = {},
            Eigen::MatrixXd F_in = {}, Eigen::VectorXd f_in = {},
            Eigen::MatrixXd F_eq = {}, Eigen::VectorXd f_eq = {},
            std::vector<Eigen::Index> exogenous_states = {});

  /// Pure quadratic cost with no constraints.
  static StageCost quadratic(Eigen::MatrixXd Qxx, Eigen::MatrixXd Quu,
                             Eigen::MatrixXd Qxu, Eigen::VectorXd qx,
                             Eigen::VectorXd qu, double q0);

  Eigen::Index n() const { return Qxx_.rows(); }
  Eigen::Index m() const { return Quu_.rows(); }

  const Eigen::MatrixXd& Qxx() const { return Qxx_; }
  const Eigen::MatrixXd& Quu() const { return Quu_; }
  const Eigen::MatrixXd& Qxu() const { return Qxu_; }
  const Eigen::VectorXd& qx() const { return qx_; }
  const Eigen::VectorXd& qu() const { return qu_; }
  double q0() const { return q0_; }
  const std::vector<PwlTerm>& pwl() const { return pwl_; }
  const Eigen::MatrixXd& F_in() const { return F_in_; }
  const Eigen::VectorXd& f_in() const { return f_in_; }
  const Eigen::MatrixXd& F_eq() const { return F_eq_; }
  const Eigen::VectorXd& f_eq() const { return f_eq_; }
  const std::vector<Eigen::Index>& exogenous_states() const { return exogenous_; }

  bool unconstrained() const {
    return F_in_.rows() == 0 && F_eq_.rows() == 0;
  }

  /// Finite part of g if (x, u) satisfies the constraints within feas_tol,
  /// std::nullopt otherwise.
  std::optional<double> eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                             double feas_tol = 1e-6) const;

  /// Whether (x, u) satisfies the polyhedral constraints within feas_tol.
  bool feasible(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                double feas_tol = 1e-6) const;

 private:
  Eigen::MatrixXd Qxx_, Quu_, Qxu_;
  Eigen::VectorXd qx_, qu_;
  double q0_;
  std::vector<PwlTerm> pwl_;
  Eigen::MatrixXd F_in_;
  Eigen::VectorXd f_in_;
  Eigen::MatrixXd F_eq_;
  Eigen::VectorXd f_eq_;
  std::vector<Eigen::Index> exogenous_;
};

/// Random affine dynamics: a seeded IID sampler plus the moments used by the
/// Bellman machinery. The sampler and the moments must describe the same
/// distribution; generators construct both together.
struct DynamicsModel {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  DynamicsSampler sampler;
  DynamicsMoments moments;
};

using InitialStateSampler = std::function<Eigen::VectorXd(Rng&)>;

/// Convex stochastic control problem with random affine dynamics.
/// gamma = 1 is the average-cost setting; gamma < 1 discounts the
/// expected-value term of the Bellman operator.
struct ControlProblem {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  double gamma = 1.0;
  StageCost cost;
  DynamicsModel dynamics;
  InitialStateSampler initial_state;
  std::string name;
};

/// Validates cross-field consistency; throws std::invalid_argument.
void validate(const ControlProblem& prob);

}  // namespace qadp
