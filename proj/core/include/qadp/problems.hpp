#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "qadp/model.hpp"
#include "qadp/quadratic.hpp"

namespace qadp {

/// A generated benchmark instance: the problem plus the initial value
/// function each method starts from.
struct BenchmarkProblem {
  ControlProblem problem;
  QuadraticFunction initial_value;
};

/// Box-constrained LQR with additive Gaussian noise. A has IID uniform
/// entries rescaled to spectral radius 1, B uniform; quadratic state/input
/// cost; inputs boxed at |u_i| <= u_max. Initial value x'Qx.
struct BoxLqrParams {
  Eigen::Index n = 12;
  Eigen::Index m = 3;
  double u_max = 0.4;
  double noise_var = 0.4;  // c ~ N(0, noise_var I)
  double q_scale = 1.0;    // Q = q_scale I
  double r_scale = 1.0;    // R = r_scale I
};

BenchmarkProblem make_box_lqr(const BoxLqrParams& params, std::uint64_t seed);

/// Multi-class commitment planning: state (nav n_t, unfunded l_t) per class,
/// input = new commitments, random log-normal returns and Beta call/
/// distribution intensities. Cost tracks a NAV target plus a small input
/// regularization around the steady-state input; inputs in [0, u_max].
/// Initial value: CE-LQR lower bound with the input box relaxed.
struct CommitmentsParams {
  Eigen::Index classes = 6;
  double lambda = 0.01;
  double u_max = 3.0;
  Eigen::VectorXd return_mean;   // defaults per make_commitments
  Eigen::VectorXd return_sd;
  Eigen::MatrixXd return_corr;   // applied to the underlying Gaussian
  double alpha_call = 2.0;
  Eigen::VectorXd beta_call;
  double alpha_dist = 3.0;
  Eigen::VectorXd beta_dist;
  double target_lo = 4.0;        // NAV target drawn U[target_lo, target_hi]
  double target_hi = 5.0;
  Eigen::Index moments_count = 10000;
};

BenchmarkProblem make_commitments(const CommitmentsParams& params,
                                  std::uint64_t seed);

/// Four-node supply chain with two suppliers and two consumers, eight links.
/// State (holdings h, prices p, demands d); input (buy b, sell s, ship z).
/// Exogenous log-normal prices and demands re-randomize every step. Initial
/// value: CE-LQR lower bound on the holdings block with the link constraints
/// replaced by a quadratic penalty.
struct SupplyChainParams {
  double h_max = 3.0;
  double u_max = 2.0;
  double alpha = 0.01;  // linear holding cost
  double beta = 0.01;   // quadratic holding cost
  double tau = 0.05;    // shipment cost
  double r = 1.3;       // sale price
  Eigen::Vector2d mu_p{0.0, 0.1};   // log-price mean
  Eigen::Vector2d mu_d{0.0, 0.4};   // log-demand mean
  double log_var = 0.4;             // isotropic log covariance
  Eigen::Index moments_count = 10000;
};

BenchmarkProblem make_supply_chain(const SupplyChainParams& params,
                                   std::uint64_t seed);

}  // namespace qadp
