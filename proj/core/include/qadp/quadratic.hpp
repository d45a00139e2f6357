#pragma once

#include <Eigen/Core>

namespace qadp {

/// Convex quadratic function V(x) = 0.5 x'Px + p'x + pi with P symmetric PSD.
///
/// The constructor symmetrizes P and rejects matrices that are asymmetric
/// beyond tolerance or have an eigenvalue below -1e-8. Invalid inputs throw
/// std::invalid_argument.
class QuadraticFunction {
 public:
  QuadraticFunction(Eigen::MatrixXd P, Eigen::VectorXd p, double pi);

  /// Zero function of dimension n.
  static QuadraticFunction zero(Eigen::Index n);

  Eigen::Index n() const { return p_.size(); }
  const Eigen::MatrixXd& P() const { return P_; }
  const Eigen::VectorXd& p() const { return p_; }
  double pi() const { return pi_; }

  /// 0.5 x'Px + p'x + pi. Dimension mismatch throws.
  double eval(const Eigen::VectorXd& x) const;

  /// Px + p.
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

 private:
  Eigen::MatrixXd P_;
  Eigen::VectorXd p_;
  double pi_;
};

double quad_eval(const QuadraticFunction& v, const Eigen::VectorXd& x);
Eigen::VectorXd quad_gradient(const QuadraticFunction& v, const Eigen::VectorXd& x);

}  // namespace qadp
