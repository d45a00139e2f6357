#include "qadp/model.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace qadp {

namespace {

double scale_of(const Eigen::MatrixXd& M) {
  return M.size() == 0 ? 1.0 : std::max(1.0, M.cwiseAbs().maxCoeff());
}

void check_symmetric(const Eigen::MatrixXd& M, const char* what) {
  if (M.rows() != M.cols())
    throw std::invalid_argument(std::string(what) + " must be square");
  if (M.size() == 0) return;
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * scale_of(M))
    throw std::invalid_argument(std::string(what) + " is not symmetric");
}

double min_eigenvalue(const Eigen::MatrixXd& S) {
  if (S.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void check_psd(const Eigen::MatrixXd& S, const char* what) {
  if (min_eigenvalue(S) < -1e-8 * scale_of(S))
    throw std::invalid_argument(std::string(what) +
                                " has a negative eigenvalue");
}

}  // namespace

QuadraticFunction::QuadraticFunction(Eigen::MatrixXd P, Eigen::VectorXd p,
                                     double pi)
    : P_(std::move(P)), p_(std::move(p)), pi_(pi) {
  check_symmetric(P_, "P");
  if (P_.rows() != p_.size())
    throw std::invalid_argument("P and p dimensions disagree");
  P_ = ((P_ + P_.transpose()) / 2).eval();
  check_psd(P_, "P");
}

QuadraticFunction QuadraticFunction::zero(Eigen::Index n) {
  return QuadraticFunction(Eigen::MatrixXd::Zero(n, n),
                           Eigen::VectorXd::Zero(n), 0.0);
}

double QuadraticFunction::eval(const Eigen::VectorXd& x) const {
  if (x.size() != n())
    throw std::invalid_argument("dimension mismatch in quadratic eval");
  return 0.5 * x.dot(P_ * x) + p_.dot(x) + pi_;
}

Eigen::VectorXd QuadraticFunction::gradient(const Eigen::VectorXd& x) const {
  if (x.size() != n())
    throw std::invalid_argument("dimension mismatch in quadratic gradient");
  return P_ * x + p_;
}

double quad_eval(const QuadraticFunction& v, const Eigen::VectorXd& x) {
  return v.eval(x);
}

Eigen::VectorXd quad_gradient(const QuadraticFunction& v,
                              const Eigen::VectorXd& x) {
  return v.gradient(x);
}

StageCost::StageCost(Eigen::MatrixXd Qxx, Eigen::MatrixXd Quu,
                     Eigen::MatrixXd Qxu, Eigen::VectorXd qx,
                     Eigen::VectorXd qu, double q0, std::vector<PwlTerm> pwl,
                     Eigen::MatrixXd F_in, Eigen::VectorXd f_in,
                     Eigen::MatrixXd F_eq, Eigen::VectorXd f_eq,
                     std::vector<Eigen::Index> exogenous_states)
    : Qxx_(std::move(Qxx)),
      Quu_(std::move(Quu)),
      Qxu_(std::move(Qxu)),
      qx_(std::move(qx)),
      qu_(std::move(qu)),
      q0_(q0),
      pwl_(std::move(pwl)),
      F_in_(std::move(F_in)),
      f_in_(std::move(f_in)),
      F_eq_(std::move(F_eq)),
      f_eq_(std::move(f_eq)),
      exogenous_(std::move(exogenous_states)) {
  check_symmetric(Qxx_, "Qxx");
  check_symmetric(Quu_, "Quu");
  const Eigen::Index nn = Qxx_.rows(), mm = Quu_.rows();
  if (Qxu_.rows() != nn || Qxu_.cols() != mm)
    throw std::invalid_argument("Qxu dimensions disagree with Qxx/Quu");
  if (qx_.size() != nn || qu_.size() != mm)
    throw std::invalid_argument("qx/qu dimensions disagree");
  Qxx_ = ((Qxx_ + Qxx_.transpose()) / 2).eval();
  Quu_ = ((Quu_ + Quu_.transpose()) / 2).eval();
  check_psd(Qxx_, "Qxx");
  check_psd(Quu_, "Quu");

  for (const auto& t : pwl_)
    if (t.f.size() != nn + mm)
      throw std::invalid_argument("piecewise linear term has wrong length");
  if (F_in_.rows() > 0 && F_in_.cols() != nn + mm)
    throw std::invalid_argument("F_in has wrong column count");
  if (F_in_.rows() != f_in_.size())
    throw std::invalid_argument("F_in and f_in row counts disagree");
  if (F_eq_.rows() > 0 && F_eq_.cols() != nn + mm)
    throw std::invalid_argument("F_eq has wrong column count");
  if (F_eq_.rows() != f_eq_.size())
    throw std::invalid_argument("F_eq and f_eq row counts disagree");

  std::vector<bool> exo(static_cast<std::size_t>(nn), false);
  for (Eigen::Index i : exogenous_) {
    if (i < 0 || i >= nn)
      throw std::invalid_argument("exogenous state index out of range");
    exo[static_cast<std::size_t>(i)] = true;
  }

  // joint convexity over decision-relevant coordinates: endogenous states
  // plus all inputs
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < nn; ++i)
    if (!exo[static_cast<std::size_t>(i)]) keep.push_back(i);
  const Eigen::Index ne = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd J(ne + mm, ne + mm);
  for (Eigen::Index a = 0; a < ne; ++a) {
    for (Eigen::Index b = 0; b < ne; ++b) J(a, b) = Qxx_(keep[a], keep[b]);
    for (Eigen::Index b = 0; b < mm; ++b) {
      J(a, ne + b) = Qxu_(keep[a], b);
      J(ne + b, a) = Qxu_(keep[a], b);
    }
  }
  J.bottomRightCorner(mm, mm) = Quu_;
  check_psd(J, "joint quadratic block");
}

StageCost StageCost::quadratic(Eigen::MatrixXd Qxx, Eigen::MatrixXd Quu,
                               Eigen::MatrixXd Qxu, Eigen::VectorXd qx,
                               Eigen::VectorXd qu, double q0) {
  return StageCost(std::move(Qxx), std::move(Quu), std::move(Qxu),
                   std::move(qx), std::move(qu), q0);
}

std::optional<double> StageCost::eval(const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u,
                                      double feas_tol) const {
  if (x.size() != n() || u.size() != m())
    throw std::invalid_argument("dimension mismatch in stage cost eval");
  if (!feasible(x, u, feas_tol)) return std::nullopt;
  double val = x.dot(Qxx_ * x) + 2.0 * x.dot(Qxu_ * u) + u.dot(Quu_ * u) +
               qx_.dot(x) + qu_.dot(u) + q0_;
  for (const auto& t : pwl_) {
    const double a = t.f.head(n()).dot(x) + t.f.tail(m()).dot(u) + t.b;
    val += std::max(0.0, a);
  }
  return val;
}

bool StageCost::feasible(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         double feas_tol) const {
  if (x.size() != n() || u.size() != m())
    throw std::invalid_argument("dimension mismatch in feasibility check");
  Eigen::VectorXd xu(n() + m());
  xu.head(n()) = x;
  xu.tail(m()) = u;
  if (F_in_.rows() > 0 &&
      ((F_in_ * xu - f_in_).array() > feas_tol).any())
    return false;
  if (F_eq_.rows() > 0 &&
      ((F_eq_ * xu - f_eq_).cwiseAbs().array() > feas_tol).any())
    return false;
  return true;
}

void validate(const ControlProblem& prob) {
  if (prob.n < 1 || prob.m < 1)
    throw std::invalid_argument("problem needs n >= 1 states, m >= 1 inputs");
  if (!(prob.gamma > 0.0) || prob.gamma > 1.0)
    throw std::invalid_argument("gamma must lie in (0, 1]");
  if (prob.cost.n() != prob.n || prob.cost.m() != prob.m)
    throw std::invalid_argument("stage cost dimensions disagree");
  if (prob.dynamics.n != prob.n || prob.dynamics.m != prob.m)
    throw std::invalid_argument("dynamics dimensions disagree");
  if (prob.dynamics.moments.n() != prob.n ||
      prob.dynamics.moments.m() != prob.m)
    throw std::invalid_argument("dynamics moments dimensions disagree");
  if (!prob.dynamics.sampler)
    throw std::invalid_argument("dynamics sampler is not set");
  if (!prob.initial_state)
    throw std::invalid_argument("initial state sampler is not set");
  Rng probe(0);
  DynamicsDraw d = prob.dynamics.sampler(probe);
  if (d.A.rows() != prob.n || d.A.cols() != prob.n || d.B.rows() != prob.n ||
      d.B.cols() != prob.m || d.c.size() != prob.n)
    throw std::invalid_argument("dynamics sampler draw has wrong shape");
  if (prob.initial_state(probe).size() != prob.n)
    throw std::invalid_argument("initial state draw has wrong shape");
}

}  // namespace qadp
