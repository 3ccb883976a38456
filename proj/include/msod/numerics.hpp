#pragma once

#include <Eigen/Dense>

namespace msod {

// Dense real symmetric matrix. Storage is symmetrized on construction, so
// (i, j) and (j, i) always hold the identical double.
class SymMatrix {
 public:
  SymMatrix() = default;

  // Throws ValidationError if `m` is not square or deviates from symmetry by
  // more than 1e-10 relative to its largest entry.
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix identity(int n);
  static SymMatrix diagonal(const Eigen::VectorXd& d);
  static SymMatrix outer(const Eigen::VectorXd& v);  // v v^T

  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Eigen::MatrixXd& dense() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;  // unit norm
};

// Full decomposition, eigenvalues ascending, eigenvectors as columns.
struct SymEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

SymEigen eigen_decompose(const SymMatrix& m);

// Largest eigenvalue and a unit eigenvector. The sign is fixed so that the
// first component of magnitude above 1e-12 is positive. Throws
// ConvergenceError if the residual ||m u - lambda u|| exceeds
// tol * max(1, |lambda|).
EigenPair top_eigenpair(const SymMatrix& m, double tol = 1e-10);

// Symmetric PSD square root. Eigenvalues down to -1e-6 ||m|| are treated as
// roundoff and clipped to zero; anything more negative throws ValidationError.
SymMatrix psd_sqrt(const SymMatrix& m);

// Rank-revealing factor F (r x n) with F^T F = m, keeping eigenvalues above
// rel_tol * lambda_max. Returns a 0 x n matrix when m vanishes.
Eigen::MatrixXd psd_factor(const SymMatrix& m, double rel_tol = 1e-12);

// Euclidean projection onto {w : 0 <= w_t <= cap, sum w = 1}.
// Throws InfeasibleError when cap * len(v) < 1.
Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& v, double cap);

// Chi-square distribution with d degrees of freedom.
double chi2_cdf(int d, double x);
double chi2_inv_cdf(int d, double p);

}  // namespace msod
