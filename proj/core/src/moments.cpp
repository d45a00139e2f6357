#include "qadp/moments.hpp"

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

namespace qadp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(const MatrixXd& M) {
  return Eigen::Map<const VectorXd>(M.data(), M.size());
}

// symmetrized copy; the contractions assume symmetric P
MatrixXd sym(const MatrixXd& P) { return 0.5 * (P + P.transpose()); }

}  // namespace

DynamicsMoments::DynamicsMoments(MatrixXd Abar, MatrixXd Bbar, VectorXd cbar,
                                 MatrixXd MA, MatrixXd MB, MatrixXd MAB,
                                 MatrixXd MAc, MatrixXd MBc, MatrixXd Mc)
    : Abar_(std::move(Abar)),
      Bbar_(std::move(Bbar)),
      cbar_(std::move(cbar)),
      MA_(std::move(MA)),
      MB_(std::move(MB)),
      MAB_(std::move(MAB)),
      MAc_(std::move(MAc)),
      MBc_(std::move(MBc)),
      Mc_(std::move(Mc)) {
  const Eigen::Index nn = Abar_.rows(), mm = Bbar_.cols();
  if (Abar_.cols() != nn || Bbar_.rows() != nn || cbar_.size() != nn)
    throw std::invalid_argument("mean dynamics dimensions disagree");
  const Eigen::Index na = nn * nn, nb = nn * mm;
  if (MA_.rows() != na || MA_.cols() != na || MB_.rows() != nb ||
      MB_.cols() != nb || MAB_.rows() != na || MAB_.cols() != nb ||
      MAc_.rows() != na || MAc_.cols() != nn || MBc_.rows() != nb ||
      MBc_.cols() != nn || Mc_.rows() != nn || Mc_.cols() != nn)
    throw std::invalid_argument("second moment dimensions disagree");
}

DynamicsMoments DynamicsMoments::deterministic(const MatrixXd& A,
                                               const MatrixXd& B,
                                               const VectorXd& c) {
  VectorXd va = vec(A), vb = vec(B);
  return DynamicsMoments(A, B, c, va * va.transpose(), vb * vb.transpose(),
                         va * vb.transpose(), va * c.transpose(),
                         vb * c.transpose(), c * c.transpose());
}

DynamicsMoments DynamicsMoments::constant_with_noise(const MatrixXd& A,
                                                     const MatrixXd& B,
                                                     const VectorXd& c_mean,
                                                     const MatrixXd& c_cov) {
  if (c_cov.rows() != c_mean.size() || c_cov.cols() != c_mean.size())
    throw std::invalid_argument("noise covariance has wrong shape");
  VectorXd va = vec(A), vb = vec(B);
  return DynamicsMoments(A, B, c_mean, va * va.transpose(),
                         vb * vb.transpose(), va * vb.transpose(),
                         va * c_mean.transpose(), vb * c_mean.transpose(),
                         c_cov + c_mean * c_mean.transpose());
}

DynamicsMoments DynamicsMoments::from_samples(const DynamicsSampler& sampler,
                                              Eigen::Index n, Eigen::Index m,
                                              Eigen::Index count,
                                              std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample count must be positive");
  Rng rng(seed);
  MatrixXd Abar = MatrixXd::Zero(n, n), Bbar = MatrixXd::Zero(n, m);
  VectorXd cbar = VectorXd::Zero(n);
  MatrixXd MA = MatrixXd::Zero(n * n, n * n),
           MB = MatrixXd::Zero(n * m, n * m),
           MAB = MatrixXd::Zero(n * n, n * m),
           MAc = MatrixXd::Zero(n * n, n), MBc = MatrixXd::Zero(n * m, n),
           Mc = MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < count; ++k) {
    DynamicsDraw d = sampler(rng);
    if (d.A.rows() != n || d.A.cols() != n || d.B.rows() != n ||
        d.B.cols() != m || d.c.size() != n)
      throw std::invalid_argument("sampler draw has wrong shape");
    VectorXd va = vec(d.A), vb = vec(d.B);
    Abar += d.A;
    Bbar += d.B;
    cbar += d.c;
    MA.selfadjointView<Eigen::Lower>().rankUpdate(va);
    MB.selfadjointView<Eigen::Lower>().rankUpdate(vb);
    MAB += va * vb.transpose();
    MAc += va * d.c.transpose();
    MBc += vb * d.c.transpose();
    Mc.selfadjointView<Eigen::Lower>().rankUpdate(d.c);
  }
  const double inv = 1.0 / static_cast<double>(count);
  MA = MatrixXd(MA.selfadjointView<Eigen::Lower>()) * inv;
  MB = MatrixXd(MB.selfadjointView<Eigen::Lower>()) * inv;
  Mc = MatrixXd(Mc.selfadjointView<Eigen::Lower>()) * inv;
  return DynamicsMoments(Abar * inv, Bbar * inv, cbar * inv, MA, MB,
                         MAB * inv, MAc * inv, MBc * inv, Mc);
}

MatrixXd DynamicsMoments::cov_A(Eigen::Index i, Eigen::Index j) const {
  const Eigen::Index nn = n();
  return MA_.block(i * nn, j * nn, nn, nn) -
         Abar_.col(i) * Abar_.col(j).transpose();
}

MatrixXd DynamicsMoments::cov_B(Eigen::Index i, Eigen::Index j) const {
  const Eigen::Index nn = n();
  return MB_.block(i * nn, j * nn, nn, nn) -
         Bbar_.col(i) * Bbar_.col(j).transpose();
}

MatrixXd DynamicsMoments::cov_AB(Eigen::Index i, Eigen::Index j) const {
  const Eigen::Index nn = n();
  return MAB_.block(i * nn, j * nn, nn, nn) -
         Abar_.col(i) * Bbar_.col(j).transpose();
}

MatrixXd DynamicsMoments::cov_Ac(Eigen::Index i) const {
  const Eigen::Index nn = n();
  return MAc_.block(i * nn, 0, nn, nn) - Abar_.col(i) * cbar_.transpose();
}

MatrixXd DynamicsMoments::cov_Bc(Eigen::Index i) const {
  const Eigen::Index nn = n();
  return MBc_.block(i * nn, 0, nn, nn) - Bbar_.col(i) * cbar_.transpose();
}

MatrixXd DynamicsMoments::cov_c() const {
  return Mc_ - cbar_ * cbar_.transpose();
}

MatrixXd DynamicsMoments::exp_AtPA(const MatrixXd& P) const {
  const Eigen::Index nn = n();
  const MatrixXd Ps = sym(P);
  MatrixXd R(nn, nn);
  for (Eigen::Index i = 0; i < nn; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      R(i, j) = Ps.cwiseProduct(MA_.block(i * nn, j * nn, nn, nn)).sum();
      R(j, i) = R(i, j);
    }
  return R;
}

MatrixXd DynamicsMoments::exp_BtPB(const MatrixXd& P) const {
  const Eigen::Index nn = n(), mm = m();
  const MatrixXd Ps = sym(P);
  MatrixXd R(mm, mm);
  for (Eigen::Index i = 0; i < mm; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      R(i, j) = Ps.cwiseProduct(MB_.block(i * nn, j * nn, nn, nn)).sum();
      R(j, i) = R(i, j);
    }
  return R;
}

MatrixXd DynamicsMoments::exp_BtPA(const MatrixXd& P) const {
  const Eigen::Index nn = n(), mm = m();
  const MatrixXd Ps = sym(P);
  MatrixXd R(mm, nn);
  // (E B'PA)_{ij} = sum_{r,s} P(r,s) E[B(r,i) A(s,j)]
  for (Eigen::Index i = 0; i < mm; ++i)
    for (Eigen::Index j = 0; j < nn; ++j)
      R(i, j) = Ps.cwiseProduct(
                      MAB_.block(j * nn, i * nn, nn, nn).transpose())
                    .sum();
  return R;
}

VectorXd DynamicsMoments::exp_AtPc(const MatrixXd& P) const {
  const Eigen::Index nn = n();
  const MatrixXd Ps = sym(P);
  VectorXd r(nn);
  for (Eigen::Index i = 0; i < nn; ++i)
    r[i] = Ps.cwiseProduct(MAc_.block(i * nn, 0, nn, nn)).sum();
  return r;
}

VectorXd DynamicsMoments::exp_BtPc(const MatrixXd& P) const {
  const Eigen::Index nn = n(), mm = m();
  const MatrixXd Ps = sym(P);
  VectorXd r(mm);
  for (Eigen::Index i = 0; i < mm; ++i)
    r[i] = Ps.cwiseProduct(MBc_.block(i * nn, 0, nn, nn)).sum();
  return r;
}

double DynamicsMoments::exp_ctPc(const MatrixXd& P) const {
  return sym(P).cwiseProduct(Mc_).sum();
}

ExpectedQuadratic expected_quadratic(const QuadraticFunction& v,
                                     const DynamicsMoments& mom,
                                     const VectorXd& x) {
  if (v.n() != mom.n() || x.size() != mom.n())
    throw std::invalid_argument("dimension mismatch in expected quadratic");
  const MatrixXd& P = v.P();
  ExpectedQuadratic out;
  out.M = mom.exp_BtPB(P);
  out.m = mom.exp_BtPA(P) * x + mom.exp_BtPc(P) +
          mom.Bbar().transpose() * v.p();
  out.mu = x.dot(mom.exp_AtPA(P) * x) + 2.0 * x.dot(mom.exp_AtPc(P)) +
           mom.exp_ctPc(P) + 2.0 * v.p().dot(mom.Abar() * x) +
           2.0 * v.p().dot(mom.cbar()) + 2.0 * v.pi();
  return out;
}

ExpectedJointQuadratic expected_joint_quadratic(const QuadraticFunction& v,
                                                const DynamicsMoments& mom) {
  if (v.n() != mom.n())
    throw std::invalid_argument("dimension mismatch in expected quadratic");
  const MatrixXd& P = v.P();
  ExpectedJointQuadratic out;
  out.Hxx = mom.exp_AtPA(P);
  out.Huu = mom.exp_BtPB(P);
  out.Hxu = mom.exp_BtPA(P).transpose();
  out.hx = mom.exp_AtPc(P) + mom.Abar().transpose() * v.p();
  out.hu = mom.exp_BtPc(P) + mom.Bbar().transpose() * v.p();
  out.h0 = 0.5 * mom.exp_ctPc(P) + v.p().dot(mom.cbar()) + v.pi();
  return out;
}

}  // namespace qadp
