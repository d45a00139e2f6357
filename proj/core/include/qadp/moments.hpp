#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

#include "qadp/quadratic.hpp"
#include "qadp/rng.hpp"

namespace qadp {

/// One realization of the random affine dynamics x+ = A x + B u + c.
struct DynamicsDraw {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd c;
};

using DynamicsSampler = std::function<DynamicsDraw(Rng&)>;

/// First and second moments of (A, B, c).
///
/// Internally the raw second moments are kept as Gram matrices of the
/// vectorized quantities, e.g. E[vec(A) vec(A)'], which keeps every expected
/// quadratic form computable by plain contractions and keeps the implied
/// covariance blocks consistent (PSD) by construction. Covariance accessors
/// subtract the mean outer products; with sample-based construction they are
/// the 1/N (not 1/(N-1)) estimates.
class DynamicsMoments {
 public:
  DynamicsMoments(Eigen::MatrixXd Abar, Eigen::MatrixXd Bbar, Eigen::VectorXd cbar,
                  Eigen::MatrixXd MA, Eigen::MatrixXd MB, Eigen::MatrixXd MAB,
                  Eigen::MatrixXd MAc, Eigen::MatrixXd MBc, Eigen::MatrixXd Mc);

  /// Deterministic dynamics: all covariance blocks zero.
  static DynamicsMoments deterministic(const Eigen::MatrixXd& A,
                                       const Eigen::MatrixXd& B,
                                       const Eigen::VectorXd& c);

  /// Constant (A, B) with additive noise c ~ (c_mean, c_cov).
  static DynamicsMoments constant_with_noise(const Eigen::MatrixXd& A,
                                             const Eigen::MatrixXd& B,
                                             const Eigen::VectorXd& c_mean,
                                             const Eigen::MatrixXd& c_cov);

  /// Monte-Carlo moments from `count` IID draws of the sampler.
  static DynamicsMoments from_samples(const DynamicsSampler& sampler,
                                      Eigen::Index n, Eigen::Index m,
                                      Eigen::Index count, std::uint64_t seed);

  Eigen::Index n() const { return Abar_.rows(); }
  Eigen::Index m() const { return Bbar_.cols(); }

  const Eigen::MatrixXd& Abar() const { return Abar_; }
  const Eigen::MatrixXd& Bbar() const { return Bbar_; }
  const Eigen::VectorXd& cbar() const { return cbar_; }

  /// Covariance blocks, e.g. cov_A(i, j) = E[a_i a_j'] - abar_i abar_j'
  /// for columns a_i of A.
  Eigen::MatrixXd cov_A(Eigen::Index i, Eigen::Index j) const;
  Eigen::MatrixXd cov_B(Eigen::Index i, Eigen::Index j) const;
  Eigen::MatrixXd cov_AB(Eigen::Index i, Eigen::Index j) const;
  Eigen::MatrixXd cov_Ac(Eigen::Index i) const;
  Eigen::MatrixXd cov_Bc(Eigen::Index i) const;
  Eigen::MatrixXd cov_c() const;

  /// Expected quadratic-form contractions for symmetric P.
  Eigen::MatrixXd exp_AtPA(const Eigen::MatrixXd& P) const;
  Eigen::MatrixXd exp_BtPB(const Eigen::MatrixXd& P) const;
  Eigen::MatrixXd exp_BtPA(const Eigen::MatrixXd& P) const;
  Eigen::VectorXd exp_AtPc(const Eigen::MatrixXd& P) const;
  Eigen::VectorXd exp_BtPc(const Eigen::MatrixXd& P) const;
  double exp_ctPc(const Eigen::MatrixXd& P) const;

 private:
  Eigen::MatrixXd Abar_, Bbar_;
  Eigen::VectorXd cbar_;
  // Gram matrices of vec(A) (column-major), vec(B), c
  Eigen::MatrixXd MA_, MB_, MAB_, MAc_, MBc_, Mc_;
};

/// E V(Ax + Bu + c) = 0.5 u'Mu + m'u + 0.5 mu as a function of u at fixed x.
/// mu carries twice the constant (the corner of the homogenized form), so a
/// value function's pi contributes 2*pi to it.
struct ExpectedQuadratic {
  Eigen::MatrixXd M;
  Eigen::VectorXd m;
  double mu;
};

/// E V(Ax + Bu + c) jointly in (x, u):
/// 0.5 [x;u]' [[Hxx, Hxu],[Hxu', Huu]] [x;u] + hx'x + hu'u + h0.
struct ExpectedJointQuadratic {
  Eigen::MatrixXd Hxx, Hxu, Huu;
  Eigen::VectorXd hx, hu;
  double h0;
};

ExpectedQuadratic expected_quadratic(const QuadraticFunction& v,
                                     const DynamicsMoments& mom,
                                     const Eigen::VectorXd& x);

ExpectedJointQuadratic expected_joint_quadratic(const QuadraticFunction& v,
                                                const DynamicsMoments& mom);

}  // namespace qadp
