#include "qadp/conic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qadp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

double max_abs(const MatrixXd& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::inaccurate: return "inaccurate";
  }
  return "unknown";
}

Eigen::Index svec_dim(Eigen::Index order) { return order * (order + 1) / 2; }

Eigen::Index ConeSpec::rows() const {
  Eigen::Index r = orthant;
  for (Eigen::Index k : soc) r += k;
  for (Eigen::Index k : psd) r += svec_dim(k);
  return r;
}

VectorXd svec(const MatrixXd& X) {
  const Eigen::Index k = X.rows();
  if (X.cols() != k) throw std::invalid_argument("svec needs a square matrix");
  const double rt2 = std::sqrt(2.0);
  VectorXd v(svec_dim(k));
  Eigen::Index idx = 0;
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = j; i < k; ++i)
      v[idx++] = (i == j) ? X(i, j) : rt2 * 0.5 * (X(i, j) + X(j, i));
  return v;
}

MatrixXd smat(const VectorXd& v) {
  const Eigen::Index len = v.size();
  const Eigen::Index k =
      static_cast<Eigen::Index>(std::llround((-1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(len))) / 2.0));
  if (svec_dim(k) != len)
    throw std::invalid_argument("smat input has no triangular length");
  const double irt2 = 1.0 / std::sqrt(2.0);
  MatrixXd X(k, k);
  Eigen::Index idx = 0;
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = j; i < k; ++i) {
      const double val = (i == j) ? v[idx] : irt2 * v[idx];
      X(i, j) = val;
      X(j, i) = val;
      ++idx;
    }
  return X;
}

namespace {

struct Layout {
  Eigen::Index l = 0;
  std::vector<Eigen::Index> soc, psd;
  std::vector<Eigen::Index> soc_off, psd_off;
  Eigen::Index rows = 0;
  double degree = 0.0;
};

Layout make_layout(const ConeSpec& spec) {
  Layout lay;
  lay.l = spec.orthant;
  lay.soc = spec.soc;
  lay.psd = spec.psd;
  Eigen::Index off = spec.orthant;
  for (Eigen::Index k : spec.soc) {
    if (k < 1) throw std::invalid_argument("second-order cone needs order >= 1");
    lay.soc_off.push_back(off);
    off += k;
  }
  for (Eigen::Index k : spec.psd) {
    if (k < 1) throw std::invalid_argument("semidefinite cone needs order >= 1");
    lay.psd_off.push_back(off);
    off += svec_dim(k);
  }
  lay.rows = off;
  lay.degree = static_cast<double>(lay.l) +
               static_cast<double>(lay.soc.size());
  for (Eigen::Index k : lay.psd) lay.degree += static_cast<double>(k);
  return lay;
}

VectorXd cone_identity(const Layout& lay) {
  VectorXd e = VectorXd::Zero(lay.rows);
  e.head(lay.l).setOnes();
  for (std::size_t i = 0; i < lay.soc.size(); ++i) e[lay.soc_off[i]] = 1.0;
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const Eigen::Index k = lay.psd[i];
    Eigen::Index idx = lay.psd_off[i];
    for (Eigen::Index j = 0; j < k; ++j) {
      e[idx] = 1.0;
      idx += k - j;
    }
  }
  return e;
}

double cone_min_eig(const Layout& lay, const VectorXd& u) {
  double lo = kInf;
  if (lay.l > 0) lo = std::min(lo, u.head(lay.l).minCoeff());
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const Eigen::Index k = lay.soc[i], off = lay.soc_off[i];
    lo = std::min(lo, u[off] - u.segment(off + 1, k - 1).norm());
  }
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const Eigen::Index k = lay.psd[i], off = lay.psd_off[i];
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(
        smat(u.segment(off, svec_dim(k))), Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
  }
  if (lay.rows == 0) lo = 0.0;
  return lo;
}

// Nesterov-Todd scaling W with lambda = W z = W^{-T} s.
struct Scaling {
  VectorXd w_orth;
  struct Soc {
    double eta = 1.0;
    VectorXd v;  // Jordan square root of the scaling point, v o v = wbar
  };
  std::vector<Soc> soc;
  struct Psd {
    MatrixXd R, Rinv;
    VectorXd lam;
  };
  std::vector<Psd> psd;
  VectorXd lambda;
};

bool compute_scaling(const Layout& lay, const VectorXd& s, const VectorXd& z,
                     Scaling& out) {
  out.w_orth = (s.head(lay.l).array() / z.head(lay.l).array()).sqrt();
  if (lay.l > 0 && !out.w_orth.allFinite()) return false;
  out.soc.assign(lay.soc.size(), {});
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const Eigen::Index k = lay.soc[i], off = lay.soc_off[i];
    VectorXd sb = s.segment(off, k), zb = z.segment(off, k);
    const double a2 = sb[0] * sb[0] - sb.tail(k - 1).squaredNorm();
    const double b2 = zb[0] * zb[0] - zb.tail(k - 1).squaredNorm();
    if (!(a2 > 0.0) || !(b2 > 0.0)) return false;
    const double a = std::sqrt(a2), b = std::sqrt(b2);
    sb /= a;
    zb /= b;
    const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
    if (!(gamma > 0.0)) return false;
    VectorXd jz = zb;
    jz.tail(k - 1) *= -1.0;
    VectorXd wbar = (sb + jz) / (2.0 * gamma);
    out.soc[i].v = (wbar + VectorXd::Unit(k, 0)) /
                   std::sqrt(2.0 * (wbar[0] + 1.0));
    out.soc[i].eta = std::sqrt(a / b);
  }
  out.psd.assign(lay.psd.size(), {});
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const Eigen::Index k = lay.psd[i], off = lay.psd_off[i];
    MatrixXd S = smat(s.segment(off, svec_dim(k)));
    MatrixXd Z = smat(z.segment(off, svec_dim(k)));
    Eigen::LLT<MatrixXd> l1(S), l2(Z);
    if (l1.info() != Eigen::Success || l2.info() != Eigen::Success)
      return false;
    MatrixXd L1 = l1.matrixL(), L2 = l2.matrixL();
    Eigen::JacobiSVD<MatrixXd> svd(L2.transpose() * L1,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd lam = svd.singularValues();
    if (!(lam.minCoeff() > 0.0)) return false;
    VectorXd ilam_sqrt = lam.cwiseSqrt().cwiseInverse();
    out.psd[i].R = L1 * svd.matrixV() * ilam_sqrt.asDiagonal();
    // R^{-1} = Lam^{1/2} V' L1^{-1}
    MatrixXd X = L1.triangularView<Eigen::Lower>().solve(
        MatrixXd(MatrixXd::Identity(k, k)));
    out.psd[i].Rinv =
        lam.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * X;
    out.psd[i].lam = lam;
  }
  return true;
}

enum class Op { W, WT, Winv, WinvT };

// apply the scaling (or its transpose/inverse) blockwise to a cone vector
VectorXd apply_scaling(const Layout& lay, const Scaling& sc, Op op,
                       const VectorXd& u) {
  VectorXd r(lay.rows);
  if (lay.l > 0) {
    if (op == Op::W || op == Op::WT)
      r.head(lay.l) = u.head(lay.l).cwiseProduct(sc.w_orth);
    else
      r.head(lay.l) = u.head(lay.l).cwiseQuotient(sc.w_orth);
  }
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const Eigen::Index k = lay.soc[i], off = lay.soc_off[i];
    const auto& blk = sc.soc[i];
    VectorXd ub = u.segment(off, k);
    VectorXd Ju = ub;
    Ju.tail(k - 1) *= -1.0;
    if (op == Op::W || op == Op::WT) {
      r.segment(off, k) = blk.eta * (2.0 * blk.v * blk.v.dot(ub) - Ju);
    } else {
      VectorXd jv = blk.v;
      jv.tail(k - 1) *= -1.0;
      r.segment(off, k) = (2.0 * jv * jv.dot(ub) - Ju) / blk.eta;
    }
  }
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const Eigen::Index k = lay.psd[i], off = lay.psd_off[i];
    const auto& blk = sc.psd[i];
    MatrixXd U = smat(u.segment(off, svec_dim(k)));
    MatrixXd V;
    switch (op) {
      case Op::W: V = blk.R.transpose() * U * blk.R; break;
      case Op::WT: V = blk.R * U * blk.R.transpose(); break;
      case Op::WinvT: V = blk.Rinv * U * blk.Rinv.transpose(); break;
      case Op::Winv: V = blk.Rinv.transpose() * U * blk.Rinv; break;
    }
    r.segment(off, svec_dim(k)) = svec(V);
  }
  return r;
}

// dense blockwise W'W, the (3,3) block of the unreduced step system;
// solving that system directly keeps the conditioning of the scaling
// linear where the normal-equations reduction would square it
MatrixXd scaling_gram(const Layout& lay, const Scaling& sc) {
  MatrixXd D = MatrixXd::Zero(lay.rows, lay.rows);
  D.diagonal().head(lay.l) = sc.w_orth.array().square();
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const Eigen::Index k = lay.soc[i], off = lay.soc_off[i];
    const auto& blk = sc.soc[i];
    MatrixXd Wb = 2.0 * blk.eta * (blk.v * blk.v.transpose());
    Wb(0, 0) -= blk.eta;
    Wb.diagonal().tail(k - 1).array() += blk.eta;
    D.block(off, off, k, k) = Wb * Wb;
  }
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const Eigen::Index len = svec_dim(lay.psd[i]), off = lay.psd_off[i];
    const MatrixXd H = sc.psd[i].R * sc.psd[i].R.transpose();
    VectorXd ej = VectorXd::Zero(len);
    for (Eigen::Index j = 0; j < len; ++j) {
      ej[j] = 1.0;
      D.block(off, off, len, len).col(j) = svec(H * smat(ej) * H);
      ej[j] = 0.0;
    }
  }
  return D;
}

VectorXd jordan_mul(const Layout& lay, const VectorXd& u, const VectorXd& v) {
  VectorXd r(lay.rows);
  r.head(lay.l) = u.head(lay.l).cwiseProduct(v.head(lay.l));
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const Eigen::Index k = lay.soc[i], off = lay.soc_off[i];
    VectorXd ub = u.segment(off, k), vb = v.segment(off, k);
    r[off] = ub.dot(vb);
    r.segment(off + 1, k - 1) =
        ub[0] * vb.tail(k - 1) + vb[0] * ub.tail(k - 1);
  }
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const Eigen::Index k = lay.psd[i], off = lay.psd_off[i];
    MatrixXd U = smat(u.segment(off, svec_dim(k)));
    MatrixXd V = smat(v.segment(off, svec_dim(k)));
    r.segment(off, svec_dim(k)) = svec(0.5 * (U * V + V * U));
  }
  return r;
}

// lambda \ d; the scaled point is diagonal on semidefinite blocks which
// keeps the Sylvester solve elementwise
VectorXd jordan_div_lambda(const Layout& lay, const Scaling& sc,
                           const VectorXd& d) {
  VectorXd r(lay.rows);
  r.head(lay.l) =
      d.head(lay.l).cwiseQuotient(sc.lambda.head(lay.l));
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const Eigen::Index k = lay.soc[i], off = lay.soc_off[i];
    VectorXd lb = sc.lambda.segment(off, k), db = d.segment(off, k);
    const double denom = lb[0] * lb[0] - lb.tail(k - 1).squaredNorm();
    const double r0 = (lb[0] * db[0] - lb.tail(k - 1).dot(db.tail(k - 1))) /
                      denom;
    r[off] = r0;
    r.segment(off + 1, k - 1) =
        (db.tail(k - 1) - r0 * lb.tail(k - 1)) / lb[0];
  }
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const Eigen::Index k = lay.psd[i], off = lay.psd_off[i];
    const VectorXd& lam = sc.psd[i].lam;
    MatrixXd D = smat(d.segment(off, svec_dim(k)));
    MatrixXd U(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b)
        U(a, b) = 2.0 * D(a, b) / (lam[a] + lam[b]);
    r.segment(off, svec_dim(k)) = svec(U);
  }
  return r;
}

// largest step in (0, inf] keeping lambda + alpha * d in the cone
double max_step(const Layout& lay, const Scaling& sc, const VectorXd& d) {
  double alpha = kInf;
  for (Eigen::Index i = 0; i < lay.l; ++i)
    if (d[i] < 0.0) alpha = std::min(alpha, -sc.lambda[i] / d[i]);
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const Eigen::Index k = lay.soc[i], off = lay.soc_off[i];
    VectorXd lb = sc.lambda.segment(off, k), db = d.segment(off, k);
    const double a = db[0] * db[0] - db.tail(k - 1).squaredNorm();
    const double b = 2.0 * (lb[0] * db[0] - lb.tail(k - 1).dot(db.tail(k - 1)));
    const double c = lb[0] * lb[0] - lb.tail(k - 1).squaredNorm();
    // smallest positive root of a t^2 + b t + c = 0 (c > 0 inside)
    double root = kInf;
    if (std::abs(a) < 1e-300) {
      if (b < 0.0) root = -c / b;
    } else {
      const double disc = b * b - 4.0 * a * c;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double u = (b >= 0.0) ? (-b - sq) : (-b + sq);
        const double r1 = u / (2.0 * a);
        const double r2 = (u != 0.0) ? (2.0 * c / u) : kInf;
        if (r1 > 0.0) root = std::min(root, r1);
        if (r2 > 0.0) root = std::min(root, r2);
      }
    }
    if (db[0] < 0.0) root = std::min(root, -lb[0] / db[0]);
    alpha = std::min(alpha, root);
  }
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const Eigen::Index k = lay.psd[i], off = lay.psd_off[i];
    const VectorXd& lam = sc.psd[i].lam;
    MatrixXd D = smat(d.segment(off, svec_dim(k)));
    VectorXd is = lam.cwiseSqrt().cwiseInverse();
    MatrixXd Ds = is.asDiagonal() * D * is.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Ds, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo < 0.0) alpha = std::min(alpha, -1.0 / lo);
  }
  return alpha;
}

// factors [[M, B'],[B, -D]]; quasidefinite-regularized LDLT with iterative
// refinement against the unregularized matrix, LU fallback when that stalls
class SaddleSolver {
 public:
  void factor(const MatrixXd& M, const MatrixXd& B,
              const MatrixXd& D = MatrixXd()) {
    nx_ = M.rows();
    ny_ = B.rows();
    K_.setZero(nx_ + ny_, nx_ + ny_);
    K_.topLeftCorner(nx_, nx_) = M;
    if (ny_ > 0) {
      K_.topRightCorner(nx_, ny_) = B.transpose();
      K_.bottomLeftCorner(ny_, nx_) = B;
      if (D.size() > 0) K_.bottomRightCorner(ny_, ny_) = -D;
    }
    const double scale = std::max(1.0, max_abs(K_));
    delta_ = 1e-11 * scale;
    MatrixXd Kreg = K_;
    Kreg.topLeftCorner(nx_, nx_).diagonal().array() += delta_;
    if (ny_ > 0)
      Kreg.bottomRightCorner(ny_, ny_).diagonal().array() -= delta_;
    ldlt_.compute(Kreg);
    ldlt_ok_ = (ldlt_.info() == Eigen::Success);
    lu_ready_ = false;
  }

  VectorXd solve(const VectorXd& rhs) {
    const double rhs_scale = 1.0 + inf_norm(rhs);
    VectorXd best;
    double best_res = kInf;
    if (ldlt_ok_) {
      VectorXd x = ldlt_.solve(rhs);
      for (int pass = 0; pass < 2; ++pass) x += ldlt_.solve(rhs - K_ * x);
      const double res = inf_norm(rhs - K_ * x);
      if (res <= 1e-10 * rhs_scale) return x;
      best = x;
      best_res = res;
    }
    if (!lu_ready_) {
      MatrixXd Kreg = K_;
      Kreg.topLeftCorner(nx_, nx_).diagonal().array() += delta_;
      if (ny_ > 0)
        Kreg.bottomRightCorner(ny_, ny_).diagonal().array() -= delta_;
      lu_.compute(Kreg);
      lu_ready_ = true;
    }
    VectorXd x = lu_.solve(rhs);
    if (x.allFinite()) {
      for (int pass = 0; pass < 2; ++pass) x += lu_.solve(rhs - K_ * x);
      const double res = inf_norm(rhs - K_ * x);
      if (res < best_res) {
        best = x;
        best_res = res;
      }
    }
    if (best.size() == 0) best = VectorXd::Zero(nx_ + ny_);
    return best;
  }

 private:
  Eigen::Index nx_ = 0, ny_ = 0;
  MatrixXd K_;
  double delta_ = 0.0;
  Eigen::LDLT<MatrixXd> ldlt_;
  Eigen::PartialPivLU<MatrixXd> lu_;
  bool ldlt_ok_ = false;
  bool lu_ready_ = false;
};

struct ProblemData {
  Eigen::Index n = 0, p = 0, rows = 0;
  MatrixXd Q, A, G;
  VectorXd q, b, h;
  double r0 = 0.0;
  Layout lay;
  double qnorm = 1.0, bnorm = 1.0, hnorm = 1.0, data_norm = 1.0;
};

ProblemData prepare(const ConicProgram& prog) {
  ProblemData d;
  d.n = prog.nvar;
  if (d.n < 1) throw std::invalid_argument("program needs at least one variable");
  d.Q = prog.Q.size() > 0 ? prog.Q : MatrixXd::Zero(d.n, d.n);
  if (d.Q.rows() != d.n || d.Q.cols() != d.n)
    throw std::invalid_argument("Q has wrong shape");
  d.Q = ((d.Q + d.Q.transpose()) / 2).eval();
  d.q = prog.q.size() > 0 ? prog.q : VectorXd::Zero(d.n);
  if (d.q.size() != d.n) throw std::invalid_argument("q has wrong length");
  d.r0 = prog.r0;
  d.A = prog.A.size() > 0 ? prog.A : MatrixXd::Zero(0, d.n);
  if (d.A.cols() != d.n) throw std::invalid_argument("A has wrong column count");
  d.p = d.A.rows();
  d.b = prog.b.size() > 0 ? prog.b : VectorXd::Zero(d.p);
  if (d.b.size() != d.p) throw std::invalid_argument("b has wrong length");
  d.G = prog.G.size() > 0 ? prog.G : MatrixXd::Zero(0, d.n);
  if (d.G.cols() != d.n) throw std::invalid_argument("G has wrong column count");
  d.rows = d.G.rows();
  d.h = prog.h.size() > 0 ? prog.h : VectorXd::Zero(d.rows);
  if (d.h.size() != d.rows) throw std::invalid_argument("h has wrong length");
  d.lay = make_layout(prog.cones);
  if (d.lay.rows != d.rows)
    throw std::invalid_argument("cone layout disagrees with G rows");
  d.qnorm = 1.0 + inf_norm(d.q);
  d.bnorm = 1.0 + inf_norm(d.b);
  d.hnorm = 1.0 + inf_norm(d.h);
  d.data_norm =
      std::max({1.0, max_abs(d.A), max_abs(d.G), max_abs(d.Q)});
  return d;
}

double objective_of(const ProblemData& d, const VectorXd& x) {
  return 0.5 * x.dot(d.Q * x) + d.q.dot(x) + d.r0;
}

bool primal_infeasibility_certificate(const ProblemData& d, const VectorXd& y,
                                      const VectorXd& z) {
  const double v = d.b.dot(y) + d.h.dot(z);
  if (!(v < 0.0)) return false;
  const double rho = -v;
  VectorXd res = d.A.transpose() * y + d.G.transpose() * z;
  const double nrm = std::max(inf_norm(y), inf_norm(z)) / rho;
  return inf_norm(res) / rho <= 1e-8 * std::max(1.0, d.data_norm * nrm);
}

VectorXd cone_project(const Layout& lay, VectorXd u) {
  for (Eigen::Index i = 0; i < lay.l; ++i) u[i] = std::max(0.0, u[i]);
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const Eigen::Index k = lay.soc[i], off = lay.soc_off[i];
    const double t = u[off];
    const double nv = u.segment(off + 1, k - 1).norm();
    if (t >= nv) continue;
    if (t <= -nv) {
      u.segment(off, k).setZero();
      continue;
    }
    const double beta = 0.5 * (t + nv);
    u[off] = beta;
    u.segment(off + 1, k - 1) *= beta / nv;
  }
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const Eigen::Index len = svec_dim(lay.psd[i]), off = lay.psd_off[i];
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(u.segment(off, len)));
    u.segment(off, len) = svec(es.eigenvectors() *
                               es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                               es.eigenvectors().transpose());
  }
  return u;
}

// Least-squares refinement of a Farkas ray. Near an infeasible solution the
// scaling blows up and the raw ray stalls at modest accuracy, so the strict
// test above keeps rejecting it. The blocks of z with visible mass pick a
// support, the pair is re-solved on that support under the normalization
// b'y + h'z = -1, projected back onto the cone, and only accepted if the
// strict test passes for the polished pair.
bool polish_infeasibility(const ProblemData& d, VectorXd& y, VectorXd& z) {
  const double kappa = std::max(inf_norm(y), inf_norm(z));
  if (!(kappa > 0.0)) return false;
  if (!(d.b.dot(y) + d.h.dot(z) < 0.0)) return false;
  VectorXd res = d.A.transpose() * y + d.G.transpose() * z;
  if (inf_norm(res) > 1e-2 * kappa * d.data_norm) return false;

  const Layout& lay = d.lay;
  const double thresh = 1e-8 * kappa;
  std::vector<Eigen::Index> sel;  // cone blocks enter or leave atomically
  for (Eigen::Index i = 0; i < lay.l; ++i)
    if (z[i] > thresh) sel.push_back(i);
  for (std::size_t i = 0; i < lay.soc.size(); ++i)
    if (inf_norm(z.segment(lay.soc_off[i], lay.soc[i])) > thresh)
      for (Eigen::Index j = 0; j < lay.soc[i]; ++j)
        sel.push_back(lay.soc_off[i] + j);
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const Eigen::Index len = svec_dim(lay.psd[i]);
    if (inf_norm(z.segment(lay.psd_off[i], len)) > thresh)
      for (Eigen::Index j = 0; j < len; ++j)
        sel.push_back(lay.psd_off[i] + j);
  }
  const Eigen::Index ns = static_cast<Eigen::Index>(sel.size());
  const Eigen::Index nw = d.p + ns;
  if (nw == 0) return false;

  MatrixXd C(nw, d.n);
  VectorXd dvec(nw);
  C.topRows(d.p) = d.A;
  dvec.head(d.p) = d.b;
  for (Eigen::Index i = 0; i < ns; ++i) {
    C.row(d.p + i) = d.G.row(sel[static_cast<std::size_t>(i)]);
    dvec[d.p + i] = d.h[sel[static_cast<std::size_t>(i)]];
  }
  MatrixXd N = C * C.transpose();
  N.diagonal().array() += 1e-12 * std::max(1.0, N.diagonal().maxCoeff());
  Eigen::LDLT<MatrixXd> ldlt(N);
  if (ldlt.info() != Eigen::Success) return false;
  const VectorXd g = ldlt.solve(dvec);
  const double denom = dvec.dot(g);
  if (!(denom > 0.0)) return false;
  const VectorXd w = -g / denom;

  VectorXd yp = w.head(d.p);
  VectorXd zfull = VectorXd::Zero(d.rows);
  for (Eigen::Index i = 0; i < ns; ++i)
    zfull[sel[static_cast<std::size_t>(i)]] = w[d.p + i];
  zfull = cone_project(lay, std::move(zfull));
  if (!primal_infeasibility_certificate(d, yp, zfull)) return false;
  y = std::move(yp);
  z = std::move(zfull);
  return true;
}

// Farkas ray sought directly. Iterates can stall at a least-violation point
// whose duals stay bounded, so no ray ever emerges from their trend; the
// residual of the certificate is then minimized over the dual cone under the
// normalization b'y + h'z = -1 as a small cone program of its own. Only a
// strictly verified pair is accepted.
bool farkas_by_aux_solve(const ProblemData& d, VectorXd& y, VectorXd& z) {
  thread_local int depth = 0;
  if (depth > 0) return false;
  const Eigen::Index nv = d.p + d.rows;
  if (nv == 0) return false;
  ConicProgram aux;
  aux.nvar = nv;
  MatrixXd Bt(d.n, nv);
  Bt.leftCols(d.p) = d.A.transpose();
  Bt.rightCols(d.rows) = d.G.transpose();
  aux.Q = Bt.transpose() * Bt;
  aux.q = VectorXd::Zero(nv);
  aux.A = MatrixXd(1, nv);
  aux.A.row(0).head(d.p) = d.b.transpose();
  aux.A.row(0).tail(d.rows) = d.h.transpose();
  aux.b = -VectorXd::Ones(1);
  aux.G = MatrixXd::Zero(d.rows, nv);
  aux.G.rightCols(d.rows) = -MatrixXd::Identity(d.rows, d.rows);
  aux.h = VectorXd::Zero(d.rows);
  aux.cones.orthant = d.lay.l;
  aux.cones.soc = d.lay.soc;
  aux.cones.psd = d.lay.psd;
  ConicSolverOptions aopts;
  aopts.feas_tol = 1e-9;
  aopts.gap_tol = 1e-9;
  aopts.max_iter = 100;
  ++depth;
  ConicSolution as = solve_conic(aux, aopts);
  --depth;
  if (as.status != SolveStatus::optimal &&
      as.status != SolveStatus::inaccurate)
    return false;
  VectorXd yp = as.x.head(d.p);
  VectorXd zp = cone_project(d.lay, as.x.tail(d.rows));
  if (!primal_infeasibility_certificate(d, yp, zp)) return false;
  y = std::move(yp);
  z = std::move(zp);
  return true;
}

// Exact duals on the complementary face. Near a degenerate optimum the
// scaled normal equations square the cone conditioning and the dual
// residual floors above tolerance while the primal and the gap converge
// fully. The cone structure of the returned point pins the face the duals
// must live on, and a plain least-squares solve on that face recovers them
// at data conditioning. Accepted only if the strict optimality predicate
// holds afterwards.
bool polish_optimality(const ProblemData& d, const VectorXd& x, VectorXd& y,
                       VectorXd& z, const VectorXd& s,
                       const ConicSolverOptions& opts) {
  const Layout& lay = d.lay;
  if (d.p > 0 && inf_norm(d.A * x - d.b) / d.bnorm > opts.feas_tol)
    return false;
  if (d.rows > 0 && inf_norm(d.G * x + s - d.h) / d.hnorm > opts.feas_tol)
    return false;

  // z = E psi over the face; per-block plans drive the projection of psi
  struct Plan {
    int kind;  // 0 orthant entry, 1 soc ray, 2 soc full, 3 psd subspace
    Eigen::Index row_off, rows, col_off, cols;
    MatrixXd basis;  // local map from psi coordinates to the z block
  };
  std::vector<Plan> plans;
  Eigen::Index ncols = 0;
  for (Eigen::Index i = 0; i < lay.l; ++i) {
    if (s[i] <= z[i])
      plans.push_back({0, i, 1, ncols++, 1, MatrixXd::Ones(1, 1)});
  }
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const Eigen::Index k = lay.soc[i], off = lay.soc_off[i];
    const double ns = s.segment(off, k).norm();
    const double nz = z.segment(off, k).norm();
    if (nz <= 1e-8 * std::max(1.0, ns)) continue;
    if (ns <= 1e-8 * std::max(1.0, nz)) {
      plans.push_back({2, off, k, ncols, k, MatrixXd::Identity(k, k)});
      ncols += k;
      continue;
    }
    MatrixXd ray(k, 1);  // complementary boundary ray (s0, -s1)
    ray(0, 0) = s[off];
    ray.col(0).tail(k - 1) = -s.segment(off + 1, k - 1);
    ray /= ns;
    plans.push_back({1, off, k, ncols++, 1, std::move(ray)});
  }
  for (std::size_t i = 0; i < lay.psd.size(); ++i) {
    const Eigen::Index K = lay.psd[i], off = lay.psd_off[i];
    const Eigen::Index len = svec_dim(K);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(s.segment(off, len)));
    const double lmax = es.eigenvalues().maxCoeff();
    std::vector<Eigen::Index> act;
    for (Eigen::Index j = 0; j < K; ++j)
      if (es.eigenvalues()[j] <= 1e-7 * std::max(0.0, lmax)) act.push_back(j);
    const Eigen::Index ka = static_cast<Eigen::Index>(act.size());
    if (ka == 0) continue;
    MatrixXd Ua(K, ka);
    for (Eigen::Index j = 0; j < ka; ++j)
      Ua.col(j) = es.eigenvectors().col(act[static_cast<std::size_t>(j)]);
    const Eigen::Index dk = svec_dim(ka);
    MatrixXd basis(len, dk);
    for (Eigen::Index j = 0; j < dk; ++j) {
      VectorXd ej = VectorXd::Zero(dk);
      ej[j] = 1.0;
      basis.col(j) = svec(Ua * smat(ej) * Ua.transpose());
    }
    plans.push_back({3, off, len, ncols, dk, std::move(basis)});
    ncols += dk;
  }

  if (d.p + ncols == 0) return false;
  MatrixXd B(d.n, d.p + ncols);
  B.leftCols(d.p) = d.A.transpose();
  for (const Plan& pl : plans)
    B.middleCols(d.p + pl.col_off, pl.cols) =
        d.G.middleRows(pl.row_off, pl.rows).transpose() * pl.basis;
  const VectorXd r0 = d.Q * x + d.q;
  VectorXd w = B.colPivHouseholderQr().solve(-r0);

  VectorXd yp = w.head(d.p);
  VectorXd zp = VectorXd::Zero(d.rows);
  for (const Plan& pl : plans) {
    VectorXd psi = w.segment(d.p + pl.col_off, pl.cols);
    if (pl.kind == 0 || pl.kind == 1) {
      psi[0] = std::max(0.0, psi[0]);
    } else if (pl.kind == 3) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> ps(smat(psi));
      psi = svec(ps.eigenvectors() *
                 ps.eigenvalues().cwiseMax(0.0).asDiagonal() *
                 ps.eigenvectors().transpose());
    }
    zp.segment(pl.row_off, pl.rows) += pl.basis * psi;
  }
  for (std::size_t i = 0; i < lay.soc.size(); ++i) {
    const Eigen::Index k = lay.soc[i], off = lay.soc_off[i];
    const double t = zp[off], nv = zp.segment(off + 1, k - 1).norm();
    if (t >= nv) continue;
    if (t <= -nv) {
      zp.segment(off, k).setZero();
    } else {
      const double beta = 0.5 * (t + nv);
      zp[off] = beta;
      zp.segment(off + 1, k - 1) *= nv > 0.0 ? beta / nv : 0.0;
    }
  }

  const VectorXd rx = r0 + d.A.transpose() * yp + d.G.transpose() * zp;
  if (inf_norm(rx) / d.qnorm > opts.feas_tol) return false;
  const double relgap =
      std::abs(s.dot(zp)) / std::max(1.0, std::abs(objective_of(d, x)));
  if (relgap > opts.gap_tol) return false;
  y = std::move(yp);
  z = std::move(zp);
  return true;
}

bool unboundedness_certificate(const ProblemData& d, const Layout& lay,
                               const VectorXd& x) {
  // residuals are judged on the unit ray; scaling the tolerance by the
  // iterate magnitude instead would let any diverging component pass
  const double xn = inf_norm(x);
  if (!(xn > 0.0)) return false;
  VectorXd xh = x / xn;
  const double tol = 1e-8 * std::max(1.0, d.data_norm);
  if (-d.q.dot(xh) <= tol) return false;
  if (inf_norm(d.Q * xh) > tol) return false;
  if (d.p > 0 && inf_norm(d.A * xh) > tol) return false;
  if (d.rows > 0 && cone_min_eig(lay, -(d.G * xh)) < -tol) return false;
  return true;
}

ConicSolution solve_without_cones(const ProblemData& d,
                                  const ConicSolverOptions& opts) {
  ConicSolution sol;
  sol.z = VectorXd::Zero(0);
  sol.s = VectorXd::Zero(0);
  SaddleSolver kkt;
  kkt.factor(d.Q, d.A);
  VectorXd rhs(d.n + d.p);
  rhs.head(d.n) = -d.q;
  rhs.tail(d.p) = d.b;
  VectorXd xy = kkt.solve(rhs);
  sol.x = xy.head(d.n);
  sol.y = xy.tail(d.p);
  VectorXd rx = d.Q * sol.x + d.q + d.A.transpose() * sol.y;
  VectorXd ry = d.A * sol.x - d.b;
  sol.dual_residual = inf_norm(rx) / d.qnorm;
  sol.primal_residual = inf_norm(ry) / d.bnorm;
  sol.objective = objective_of(d, sol.x);
  sol.iterations = 1;
  if (sol.dual_residual <= opts.feas_tol * 10 &&
      sol.primal_residual <= opts.feas_tol * 10) {
    sol.status = SolveStatus::optimal;
    return sol;
  }
  if (primal_infeasibility_certificate(d, sol.y, sol.z)) {
    sol.status = SolveStatus::infeasible;
    return sol;
  }
  // split q along the eigenspaces of Q on the nullspace of A to expose a
  // descent ray when the direct solve stalled
  if (d.p == 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(d.Q);
    const double lmax = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    VectorXd qt = es.eigenvectors().transpose() * d.q;
    VectorXd ray = VectorXd::Zero(d.n);
    for (Eigen::Index i = 0; i < d.n; ++i)
      if (es.eigenvalues()[i] <= 1e-12 * lmax && std::abs(qt[i]) > 0)
        ray -= qt[i] * es.eigenvectors().col(i);
    if (inf_norm(ray) > 1e-10 * d.qnorm) {
      sol.status = SolveStatus::unbounded;
      sol.x = ray / ray.norm();
      return sol;
    }
  } else if (unboundedness_certificate(d, d.lay, sol.x)) {
    sol.status = SolveStatus::unbounded;
    return sol;
  }
  sol.status = SolveStatus::inaccurate;
  return sol;
}

}  // namespace

ConicSolution solve_conic(const ConicProgram& prog,
                          const ConicSolverOptions& opts) {
  ProblemData d = prepare(prog);
  const Layout& lay = d.lay;
  if (d.rows == 0) return solve_without_cones(d, opts);

  const VectorXd e = cone_identity(lay);
  ConicSolution sol;

  // initial point from the scaling-free Newton system
  SaddleSolver kkt;
  MatrixXd M = d.Q;
  M.selfadjointView<Eigen::Lower>().rankUpdate(d.G.transpose());
  M = MatrixXd(M.selfadjointView<Eigen::Lower>());
  kkt.factor(M, d.A);
  VectorXd rhs(d.n + d.p);
  rhs.head(d.n) = -d.q + d.G.transpose() * d.h;
  rhs.tail(d.p) = d.b;
  VectorXd xy = kkt.solve(rhs);
  VectorXd x = xy.head(d.n);
  VectorXd y = xy.tail(d.p);
  VectorXd z = d.G * x - d.h;
  VectorXd s = -z;
  const double ts = cone_min_eig(lay, s);
  if (ts < 1e-8) s += (1.0 - ts) * e;
  const double tz = cone_min_eig(lay, z);
  if (tz < 1e-8) z += (1.0 - tz) * e;

  VectorXd best_x = x, best_y = y, best_z = z, best_s = s;
  double best_metric = kInf;
  double stall_ref = kInf;
  int stall_iter = 0;

  // step system stays in unreduced quasidefinite form, see scaling_gram
  MatrixXd B(d.p + d.rows, d.n);
  B.topRows(d.p) = d.A;
  B.bottomRows(d.rows) = d.G;
  MatrixXd Dfull = MatrixXd::Zero(d.p + d.rows, d.p + d.rows);

  Scaling sc;
  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    VectorXd rx = d.Q * x + d.q + d.A.transpose() * y + d.G.transpose() * z;
    VectorXd ry = d.A * x - d.b;
    VectorXd rz = d.G * x + s - d.h;
    const double gap = s.dot(z);
    const double pobj = objective_of(d, x);
    const double relgap = gap / std::max(1.0, std::abs(pobj));
    const double resx = inf_norm(rx) / d.qnorm;
    const double resy = inf_norm(ry) / d.bnorm;
    const double resz = inf_norm(rz) / d.hnorm;
    const double metric = std::max({resx, resy, resz, relgap});
    if (metric < best_metric) {
      best_metric = metric;
      best_x = x;
      best_y = y;
      best_z = z;
      best_s = s;
    }
    if (opts.verbose)
      std::fprintf(stderr, "iter %3d  pobj % .6e  gap %.3e  res %.3e %.3e %.3e\n",
                   iter, pobj, gap, resx, resy, resz);
    sol.iterations = iter;
    if (resx <= opts.feas_tol && resy <= opts.feas_tol &&
        resz <= opts.feas_tol && relgap <= opts.gap_tol) {
      sol.status = SolveStatus::optimal;
      break;
    }
    if (primal_infeasibility_certificate(d, y, z) ||
        polish_infeasibility(d, y, z)) {
      sol.status = SolveStatus::infeasible;
      const double rho = -(d.b.dot(y) + d.h.dot(z));
      y /= rho;
      z /= rho;
      break;
    }
    if (unboundedness_certificate(d, lay, x)) {
      sol.status = SolveStatus::unbounded;
      x /= -d.q.dot(x);
      break;
    }
    if (metric < 0.9 * stall_ref) {
      stall_ref = metric;
      stall_iter = iter;
    }
    if (iter == opts.max_iter || iter - stall_iter >= 15) {
      sol.status = SolveStatus::inaccurate;
      x = best_x;
      y = best_y;
      z = best_z;
      s = best_s;
      break;
    }

    if (!compute_scaling(lay, s, z, sc)) {
      sol.status = SolveStatus::inaccurate;
      x = best_x;
      y = best_y;
      z = best_z;
      s = best_s;
      break;
    }
    sc.lambda = apply_scaling(lay, sc, Op::W, z);
    const double mu = gap / lay.degree;

    Dfull.bottomRightCorner(d.rows, d.rows) = scaling_gram(lay, sc);
    kkt.factor(d.Q, B, Dfull);

    auto direction = [&](const VectorXd& dv, VectorXd& dx, VectorXd& dy,
                         VectorXd& dz, VectorXd& ds) {
      VectorXd r(d.n + d.p + d.rows);
      r.head(d.n) = -rx;
      r.segment(d.n, d.p) = -ry;
      r.tail(d.rows) = -rz + apply_scaling(lay, sc, Op::WT, dv);
      VectorXd dxyz = kkt.solve(r);
      dx = dxyz.head(d.n);
      dy = dxyz.segment(d.n, d.p);
      dz = dxyz.tail(d.rows);
      ds = -rz - d.G * dx;
    };

    VectorXd dxa, dya, dza, dsa;
    direction(sc.lambda, dxa, dya, dza, dsa);
    VectorXd u1 = apply_scaling(lay, sc, Op::WinvT, dsa);
    VectorXd u2 = apply_scaling(lay, sc, Op::W, dza);
    const double alpha_aff =
        std::min(1.0, std::min(max_step(lay, sc, u1), max_step(lay, sc, u2)));
    const double gap_aff =
        (s + alpha_aff * dsa).dot(z + alpha_aff * dza);
    const double sigma =
        std::pow(std::clamp(gap_aff / gap, 0.0, 1.0), 3.0);

    VectorXd dcomb = jordan_mul(lay, sc.lambda, sc.lambda) +
                     jordan_mul(lay, u1, u2) - sigma * mu * e;
    VectorXd dv = jordan_div_lambda(lay, sc, dcomb);
    VectorXd dx, dy, dz, ds;
    direction(dv, dx, dy, dz, ds);
    u1 = apply_scaling(lay, sc, Op::WinvT, ds);
    u2 = apply_scaling(lay, sc, Op::W, dz);
    const double alpha_max =
        std::min(max_step(lay, sc, u1), max_step(lay, sc, u2));
    const double alpha = std::min(1.0, 0.99 * alpha_max);
    if (!std::isfinite(alpha) || alpha <= 0.0) {
      sol.status = SolveStatus::inaccurate;
      x = best_x;
      y = best_y;
      z = best_z;
      s = best_s;
      break;
    }
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
  }

  if (sol.status == SolveStatus::inaccurate) {
    // a stalled run can still hide a clean answer: exact duals on the
    // complementary face, or a Farkas pair the iterates never approached
    if (polish_optimality(d, x, y, z, s, opts)) {
      sol.status = SolveStatus::optimal;
    } else if (farkas_by_aux_solve(d, y, z)) {
      sol.status = SolveStatus::infeasible;
      const double rho = -(d.b.dot(y) + d.h.dot(z));
      y /= rho;
      z /= rho;
    }
  }

  sol.x = x;
  sol.y = y;
  sol.z = z;
  sol.s = s;
  sol.objective = objective_of(d, x);
  sol.gap = s.dot(z);
  VectorXd rx = d.Q * x + d.q + d.A.transpose() * y + d.G.transpose() * z;
  sol.dual_residual = inf_norm(rx) / d.qnorm;
  sol.primal_residual = std::max(inf_norm(d.A * x - d.b) / d.bnorm,
                                 inf_norm(d.G * x + s - d.h) / d.hnorm);
  return sol;
}

}  // namespace qadp
