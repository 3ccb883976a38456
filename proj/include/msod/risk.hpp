#pragma once

#include <Eigen/Dense>

#include "msod/designs.hpp"
#include "msod/kernels.hpp"

namespace msod {

struct RiskReport {
  double minimax_risk = 0.0;   // C * lambda_max(K^{1/2} Q K^{1/2})
  Eigen::VectorXd witness_mu;  // a worst-case mean vector attaining the risk
  double max_pair_probability = 0.0;
  double budget = 1.0;         // C
};

// Variance of the difference-in-means estimator split into the part the
// design controls and the two parts it cannot touch.
struct MseDecomposition {
  double design_term = 0.0;  // B(sigma, mu) / n^2
  double noise_term = 0.0;   // sum_i Var(eps_i) / n^2
  double sate_term = 0.0;    // Var(SATE)
  double total = 0.0;
};

// B(sigma, mu0) = sum_W sigma(W) <W, mu0>^2 = mu0^T Q(sigma) mu0.
// mu0 is centered first; B is invariant to adding constants.
double b_value(const Design& design, const Eigen::VectorXd& mu0);

// Worst case of B over {K v : <v, K v> <= c}. The witness is sqrt(c) K^{1/2} u
// for the top eigenvector u of K^{1/2} Q K^{1/2}, which lies in that set and
// attains the maximum.
RiskReport minimax_risk(const Design& design, const GramMatrix& gram, double c = 1.0);

MseDecomposition predict_mse(const Design& design, const Eigen::VectorXd& mu,
                             double noise_var_sum, double sate_var);

}  // namespace msod
