#include "qadp/fitting.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qadp {

double huber(double z, double m) {
  if (m <= 0.0) throw std::invalid_argument("huber knee must be positive");
  const double a = std::abs(z);
  return a <= m ? 0.5 * z * z : m * (a - 0.5 * m);
}

double huber(const Eigen::VectorXd& z, double m) { return huber(z.norm(), m); }

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// P x as a linear map of svec(P)
MatrixXd grad_svec_map(const VectorXd& x) {
  const Eigen::Index n = x.size();
  MatrixXd D = MatrixXd::Zero(n, svec_dim(n));
  const double irt2 = 1.0 / std::sqrt(2.0);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j; i < n; ++i, ++k) {
      if (i == j) {
        D(i, k) = x[i];
      } else {
        D(i, k) += irt2 * x[j];
        D(j, k) += irt2 * x[i];
      }
    }
  return D;
}

// index of entry (i, j), i >= j, in the svec of an order-k matrix
Eigen::Index svec_index(Eigen::Index i, Eigen::Index j, Eigen::Index k) {
  return j * k - j * (j - 1) / 2 + (i - j);
}

MatrixXd clamp_psd(const MatrixXd& P) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(P);
  if (es.eigenvalues().minCoeff() >= 0.0) return P;
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
         es.eigenvectors().transpose();
}

// minimal constant that puts the fitted quadratic above the bound:
// pi_lb + 0.5 dp' dP^+ dp, components outside the numerical range dropped
double tight_constant(const MatrixXd& dP, const VectorXd& dp, double pi_lb) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(dP);
  const VectorXd ev = es.eigenvalues();
  const double thresh = 1e-9 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  const VectorXd w = es.eigenvectors().transpose() * dp;
  double quad = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > thresh) quad += w[i] * w[i] / ev[i];
  return pi_lb + 0.5 * quad;
}

struct FitData {
  Eigen::Index n = 0;        // state dimension
  Eigen::Index d = 0;        // residual dimension (n or 1)
  bool with_offset = false;  // fit_values carries the scalar c
  std::vector<MatrixXd> D;   // residual_i = D_i theta - target_i
  std::vector<VectorXd> target;
};

FitResult solve_fit(const FitData& fd, const FitOptions& opts) {
  const Eigen::Index n = fd.n, d = fd.d;
  const Eigen::Index N = static_cast<Eigen::Index>(fd.D.size());
  const Eigen::Index dP = svec_dim(n);
  const Eigen::Index ntheta = dP + n + (fd.with_offset ? 1 : 0);
  const bool huber_loss = opts.loss == LossKind::huber;
  if (huber_loss && opts.huber_m <= 0.0)
    throw std::invalid_argument("huber knee must be positive");
  if (opts.ridge < 0.0 || opts.lasso < 0.0)
    throw std::invalid_argument("regularization weights must be nonnegative");
  if (opts.lower_bound && opts.lower_bound->n() != n)
    throw std::invalid_argument("lower bound dimension mismatch");
  if (opts.fixed_minimizer && opts.fixed_minimizer->size() != n)
    throw std::invalid_argument("fixed minimizer dimension mismatch");

  const Eigen::Index off_slack = ntheta;  // LMI corner variable
  const Eigen::Index n_slack = opts.lower_bound ? 1 : 0;
  const Eigen::Index off_lasso = off_slack + n_slack;
  const Eigen::Index n_lasso = opts.lasso > 0.0 ? dP + n : 0;
  const Eigen::Index off_aux = off_lasso + n_lasso;
  const Eigen::Index n_aux = huber_loss ? N * (d + 1) : 0;
  const Eigen::Index nvar = off_aux + n_aux;

  ConicProgram prog;
  prog.nvar = nvar;
  prog.Q = MatrixXd::Zero(nvar, nvar);
  prog.q = VectorXd::Zero(nvar);

  for (Eigen::Index i = 0; i < N; ++i) {
    const MatrixXd& Di = fd.D[static_cast<std::size_t>(i)];
    const VectorXd& yi = fd.target[static_cast<std::size_t>(i)];
    prog.Q.topLeftCorner(ntheta, ntheta) += Di.transpose() * Di / N;
    prog.q.head(ntheta) -= Di.transpose() * yi / N;
    prog.r0 += 0.5 * yi.squaredNorm() / N;
    if (huber_loss) {
      const Eigen::Index oa = off_aux + i * (d + 1);
      prog.Q.block(oa, oa, d, d) += MatrixXd::Identity(d, d) / N;
      prog.Q.block(0, oa, ntheta, d) -= Di.transpose() / N;
      prog.Q.block(oa, 0, d, ntheta) -= Di / N;
      prog.q.segment(oa, d) += yi / N;
      prog.q[oa + d] = opts.huber_m / N;
    }
  }
  if (opts.ridge > 0.0)
    prog.Q.diagonal().head(dP + n).array() += 2.0 * opts.ridge;
  if (n_lasso > 0) {
    // sum_ij |P_ij| counts off-diagonals twice: weight sqrt(2) on those
    // svec coordinates, 1 on diagonals and on p
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = j; i < n; ++i, ++k)
        prog.q[off_lasso + k] = opts.lasso * (i == j ? 1.0 : std::sqrt(2.0));
    for (Eigen::Index j = 0; j < n; ++j)
      prog.q[off_lasso + dP + j] = opts.lasso;
  }

  Eigen::Index neq = 0;
  if (opts.symmetric) neq += n;
  if (opts.fixed_minimizer) neq += n;
  prog.A = MatrixXd::Zero(neq, nvar);
  prog.b = VectorXd::Zero(neq);
  Eigen::Index erow = 0;
  if (opts.symmetric)
    for (Eigen::Index j = 0; j < n; ++j) prog.A(erow++, dP + j) = 1.0;
  if (opts.fixed_minimizer) {
    prog.A.block(erow, 0, n, dP) = grad_svec_map(*opts.fixed_minimizer);
    prog.A.block(erow, dP, n, n).setIdentity();
    erow += n;
  }

  const Eigen::Index rows_lasso = 2 * n_lasso;
  const Eigen::Index rows_huber_orth = (huber_loss && d == 1) ? 2 * N : 0;
  const Eigen::Index orthant = rows_lasso + rows_huber_orth;
  const Eigen::Index rows_soc = (huber_loss && d > 1) ? N * (d + 1) : 0;
  const Eigen::Index rows_psd =
      opts.lower_bound ? svec_dim(n + 1) : dP;
  prog.G = MatrixXd::Zero(orthant + rows_soc + rows_psd, nvar);
  prog.h = VectorXd::Zero(prog.G.rows());
  prog.cones.orthant = orthant;

  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < n_lasso; ++k) {
    prog.G(r, k) = 1.0;  // w_k >= theta_k
    prog.G(r, off_lasso + k) = -1.0;
    ++r;
    prog.G(r, k) = -1.0;  // w_k >= -theta_k
    prog.G(r, off_lasso + k) = -1.0;
    ++r;
  }
  if (rows_huber_orth > 0) {
    for (Eigen::Index i = 0; i < N; ++i) {
      const Eigen::Index oa = off_aux + i * 2;
      prog.G(r, oa) = 1.0;  // t_i >= a_i
      prog.G(r, oa + 1) = -1.0;
      ++r;
      prog.G(r, oa) = -1.0;  // t_i >= -a_i
      prog.G(r, oa + 1) = -1.0;
      ++r;
    }
  }
  if (rows_soc > 0) {
    for (Eigen::Index i = 0; i < N; ++i) {
      const Eigen::Index oa = off_aux + i * (d + 1);
      prog.G(r, oa + d) = -1.0;  // (t_i, a_i) in the second-order cone
      for (Eigen::Index j = 0; j < d; ++j) prog.G(r + 1 + j, oa + j) = -1.0;
      r += d + 1;
      prog.cones.soc.push_back(d + 1);
    }
  }
  if (opts.lower_bound) {
    // svec of [[P - P_lb, p - p_lb], [(p - p_lb)', corner]] in the cone;
    // the corner is free, so the block only pins the shape of P - P_lb
    const Eigen::Index K = n + 1;
    const MatrixXd& Plb = opts.lower_bound->P();
    const VectorXd& plb = opts.lower_bound->p();
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = j; i < n; ++i, ++k) {
        const Eigen::Index row = r + svec_index(i, j, K);
        prog.G(row, k) = -1.0;
        prog.h[row] = -(i == j ? Plb(i, j) : std::sqrt(2.0) * Plb(i, j));
      }
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index row = r + svec_index(n, j, K);
      prog.G(row, dP + j) = -std::sqrt(2.0);
      prog.h[row] = -std::sqrt(2.0) * plb[j];
    }
    prog.G(r + svec_index(n, n, K), off_slack) = -1.0;
    prog.cones.psd.push_back(K);
  } else {
    for (Eigen::Index k = 0; k < dP; ++k) prog.G(r + k, k) = -1.0;
    prog.cones.psd.push_back(n);
  }

  const ConicSolution sol = solve_conic(prog, opts.solver);
  FitResult out{QuadraticFunction::zero(n),
                std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN(), sol.status};
  if (sol.status != SolveStatus::optimal &&
      sol.status != SolveStatus::inaccurate)
    return out;

  MatrixXd P = clamp_psd(smat(sol.x.head(dP)));
  VectorXd p = sol.x.segment(dP, n);
  if (opts.symmetric) p.setZero();
  double pi = 0.0;
  if (fd.with_offset) pi = sol.x[dP + n];
  if (opts.lower_bound && !fd.with_offset)
    pi = tight_constant(P - opts.lower_bound->P(), p - opts.lower_bound->p(),
                        opts.lower_bound->pi());
  out.value = QuadraticFunction(std::move(P), std::move(p), pi);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    VectorXd theta(ntheta);
    theta.head(dP) = svec(out.value.P());
    theta.segment(dP, n) = out.value.p();
    if (fd.with_offset) theta[dP + n] = out.value.pi();
    const VectorXd res =
        fd.D[static_cast<std::size_t>(i)] * theta -
        fd.target[static_cast<std::size_t>(i)];
    loss += huber_loss ? huber(res, opts.huber_m) : 0.5 * res.squaredNorm();
  }
  out.loss = loss / N;
  out.objective = sol.objective;
  return out;
}

}  // namespace

FitResult fit_value_gradient(const std::vector<VectorXd>& xs,
                             const std::vector<VectorXd>& gs,
                             const FitOptions& opts) {
  if (xs.empty() || xs.size() != gs.size())
    throw std::invalid_argument("need matching, nonempty sample lists");
  FitData fd;
  fd.n = xs[0].size();
  fd.d = fd.n;
  fd.with_offset = false;
  const Eigen::Index dP = svec_dim(fd.n);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != fd.n || gs[i].size() != fd.n)
      throw std::invalid_argument("sample dimension mismatch");
    MatrixXd D(fd.n, dP + fd.n);
    D.leftCols(dP) = grad_svec_map(xs[i]);
    D.rightCols(fd.n).setIdentity();
    fd.D.push_back(std::move(D));
    fd.target.push_back(gs[i]);
  }
  return solve_fit(fd, opts);
}

FitResult fit_values(const std::vector<VectorXd>& xs,
                     const std::vector<double>& vs, const FitOptions& opts) {
  if (xs.empty() || xs.size() != vs.size())
    throw std::invalid_argument("need matching, nonempty sample lists");
  FitData fd;
  fd.n = xs[0].size();
  fd.d = 1;
  fd.with_offset = true;
  const Eigen::Index dP = svec_dim(fd.n);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != fd.n)
      throw std::invalid_argument("sample dimension mismatch");
    MatrixXd D(1, dP + fd.n + 1);
    D.leftCols(dP) = 0.5 * svec(xs[i] * xs[i].transpose()).transpose();
    D.block(0, dP, 1, fd.n) = xs[i].transpose();
    D(0, dP + fd.n) = 1.0;
    fd.D.push_back(std::move(D));
    fd.target.push_back(VectorXd::Constant(1, vs[i]));
  }
  return solve_fit(fd, opts);
}

bool quadratic_dominates(const QuadraticFunction& v1,
                         const QuadraticFunction& v2) {
  if (v1.n() != v2.n())
    throw std::invalid_argument("dimension mismatch in dominance test");
  const Eigen::Index n = v1.n();
  MatrixXd M(n + 1, n + 1);
  M.topLeftCorner(n, n) = v1.P() - v2.P();
  M.col(n).head(n) = v1.p() - v2.p();
  M.row(n).head(n) = (v1.p() - v2.p()).transpose();
  M(n, n) = 2.0 * (v1.pi() - v2.pi());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-8;
}

QuadraticFunction damped_combine(const QuadraticFunction& v_new,
                                 const QuadraticFunction& v_old, double rho) {
  if (!(rho > 0.0 && rho <= 1.0))
    throw std::invalid_argument("damping must lie in (0, 1]");
  if (v_new.n() != v_old.n())
    throw std::invalid_argument("dimension mismatch in damped combination");
  return QuadraticFunction(rho * v_new.P() + (1.0 - rho) * v_old.P(),
                           rho * v_new.p() + (1.0 - rho) * v_old.p(),
                           rho * v_new.pi() + (1.0 - rho) * v_old.pi());
}

}  // namespace qadp
