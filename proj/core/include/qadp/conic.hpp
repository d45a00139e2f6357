#pragma once

#include <Eigen/Core>
#include <vector>

namespace qadp {

enum class SolveStatus { optimal, infeasible, unbounded, inaccurate };

const char* to_string(SolveStatus s);

/// Cone layout for the slack rows s = h - Gx, in order:
/// `orthant` nonnegative rows, then one block per entry of `soc`
/// (t >= ||v|| with the t row first), then one block per entry of `psd`
/// (order k, occupying k(k+1)/2 rows in scaled svec coordinates).
struct ConeSpec {
  Eigen::Index orthant = 0;
  std::vector<Eigen::Index> soc;
  std::vector<Eigen::Index> psd;

  Eigen::Index rows() const;
  bool empty() const { return rows() == 0; }
};

/// minimize    0.5 x'Qx + q'x + r0
/// subject to  A x = b
///             h - G x in K
///
/// Q must be PSD on the null space of A (convex on the feasible set).
struct ConicProgram {
  Eigen::Index nvar = 0;
  Eigen::MatrixXd Q;  // empty means zero
  Eigen::VectorXd q;
  double r0 = 0.0;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  ConeSpec cones;
};

struct ConicSolverOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 100;
  bool verbose = false;
};

/// Duals follow L = f(x) + y'(Ax - b) + z'(Gx - h): at an optimum
/// Qx + q + A'y + G'z = 0 with z in K*. Sensitivity of the optimal value to
/// b is -y, which is what the Bellman gradient extraction relies on.
struct ConicSolution {
  SolveStatus status = SolveStatus::inaccurate;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd z;
  Eigen::VectorXd s;
  double objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
};

/// Dense Nesterov-Todd scaled predictor-corrector interior-point method.
/// Deterministic: identical programs produce identical solutions.
ConicSolution solve_conic(const ConicProgram& prog,
                          const ConicSolverOptions& opts = {});

/// Scaled symmetric vectorization: off-diagonal entries multiplied by
/// sqrt(2) so that svec(X)'svec(Y) = tr(XY). Column-major lower triangle
/// order: (0,0), (1,0), ..., (k-1,0), (1,1), ...
Eigen::Index svec_dim(Eigen::Index order);
Eigen::VectorXd svec(const Eigen::MatrixXd& X);
Eigen::MatrixXd smat(const Eigen::VectorXd& v);

}  // namespace qadp
