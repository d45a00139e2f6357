#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "qadp/conic.hpp"
#include "qadp/quadratic.hpp"

namespace qadp {

/// Circular Huber loss: 0.5||z||^2 for ||z|| <= m, m(||z|| - m/2) beyond.
/// Scalar arguments are the one-dimensional case.
double huber(double z, double m);
double huber(const Eigen::VectorXd& z, double m);

enum class LossKind { squared, huber };

struct FitOptions {
  LossKind loss = LossKind::squared;
  double huber_m = 1.0;
  double ridge = 0.0;   // lambda * (||P||_F^2 + ||p||^2)
  double lasso = 0.0;   // lambda * (sum_ij |P_ij| + ||p||_1), diagonal included
  bool symmetric = false;                          // force p = 0
  std::optional<Eigen::VectorXd> fixed_minimizer;  // force P x* + p = 0
  std::optional<QuadraticFunction> lower_bound;    // V + s >= V_lb via LMI
  ConicSolverOptions solver{.feas_tol = 1e-7, .gap_tol = 1e-7, .max_iter = 200};
};

struct FitResult {
  QuadraticFunction value;
  double loss = 0.0;       // (1/N) sum L(residual_i) at the returned value
  double objective = 0.0;  // loss + regularization, the conic optimum
  SolveStatus status = SolveStatus::inaccurate;
};

/// Fit gradient targets: minimize (1/N) sum L(P x_i + p - g_i) + r(theta)
/// over PSD-constrained quadratics. One conic program.
FitResult fit_value_gradient(const std::vector<Eigen::VectorXd>& xs,
                             const std::vector<Eigen::VectorXd>& gs,
                             const FitOptions& opts = {});

/// Fit value targets with a free constant: minimize
/// (1/N) sum L(0.5 x_i'P x_i + p'x_i + c - v_i) + r(theta).
FitResult fit_values(const std::vector<Eigen::VectorXd>& xs,
                     const std::vector<double>& vs,
                     const FitOptions& opts = {});

/// True iff v1(x) >= v2(x) for all x, decided by the PSD test on the
/// homogenized difference block (eigenvalue tolerance -1e-8).
bool quadratic_dominates(const QuadraticFunction& v1,
                         const QuadraticFunction& v2);

/// rho * v_new + (1 - rho) * v_old, rho in (0, 1].
QuadraticFunction damped_combine(const QuadraticFunction& v_new,
                                 const QuadraticFunction& v_old, double rho);

}  // namespace qadp
