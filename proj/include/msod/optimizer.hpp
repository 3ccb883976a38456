#pragma once

#include <vector>

#include <Eigen/Dense>

#include "msod/designs.hpp"
#include "msod/kernels.hpp"
#include "msod/numerics.hpp"

namespace msod {

inline constexpr int kTopAssignmentsMaxN = 16;
inline constexpr int kTopAssignmentsMaxT = 200;
inline constexpr int kMsodExactMaxN = 14;

struct CandidatePool {
  std::vector<Assignment> u;             // canonical representatives, columns of U
  std::vector<double> objective_values;  // W^T K W, nondecreasing
  bool truncated = false;                // fewer pairs exist than requested

  Eigen::MatrixXd matrix() const;  // n x T
};

struct CappedSimplexSolution {
  Eigen::VectorXd v;
  double lambda_star = 0.0;
  int iterations = 0;
  double kkt_gap = 0.0;
};

// W^T K W accumulated as r = sum_j w_j K[:, j], then sum_i w_i r_i, both in
// index order. best_assignment reproduces exactly these roundings.
double quadratic_objective(const SymMatrix& k, const std::vector<std::int8_t>& w);
double quadratic_objective(const GramMatrix& gram, const Assignment& w);

// Global minimizer of W^T K W over balanced W; ties go to the lex-smallest
// representative. Depth-first search over w_1 = +1 with an eigenvalue bound.
Assignment best_assignment(const GramMatrix& gram);

// The t_count best sign-pairs by (objective, lex order).
CandidatePool top_assignments(const GramMatrix& gram, int t_count);

// min lambda_max(sum_t v_t a_t a_t^T) over {0 <= v <= cap, sum v = 1}, where
// G = U^T K U = [a_s^T a_t].
CappedSimplexSolution minimize_lambda_max_capped(const SymMatrix& g, double cap);
CappedSimplexSolution minimize_lambda_max_capped(const CandidatePool& pool,
                                                 const GramMatrix& gram, double cap);

// lambda_max(diag(sqrt v) G diag(sqrt v)).
double reduced_lambda_max(const SymMatrix& g, const Eigen::VectorXd& v);
// Gradient of reduced_lambda_max in v where the top eigenvalue is simple:
// g_t = (G D y)_t^2 / lambda with D = diag(sqrt v) and y the top eigenvector.
Eigen::VectorXd lambda_max_subgradient(const SymMatrix& g, const Eigen::VectorXd& v);
// min over the capped simplex of sum_t v_t a_t^T Z a_t for a unit-trace PSD
// Z; a lower bound on the optimal lambda.
double capped_dual_bound(const Eigen::VectorXd& c, double cap);

// Minimax-optimal blinded design over every sign-pair (n <= kMsodExactMaxN).
Design msod_exact(const GramMatrix& gram);

// Inference-constrained MSOD: top t_count pairs, pair mass capped at alpha.
Design icmsod(const GramMatrix& gram, double alpha, int t_count);

}  // namespace msod
