#include "msod/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "msod/errors.hpp"

namespace msod {

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ValidationError("symmetric matrix must be square and non-empty");
  }
  if (!m.allFinite()) {
    throw ValidationError("matrix contains non-finite entries");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ValidationError("matrix is not symmetric");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int n) {
  return SymMatrix(Eigen::MatrixXd::Identity(n, n));
}

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& d) {
  return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

SymMatrix SymMatrix::outer(const Eigen::VectorXd& v) {
  return SymMatrix(v * v.transpose());
}

SymEigen eigen_decompose(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.dense());
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("symmetric eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace {

void fix_sign(Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

double spectral_radius(const Eigen::VectorXd& values) {
  return std::max(std::abs(values[0]), std::abs(values[values.size() - 1]));
}

Eigen::VectorXd clipped_spectrum(const SymEigen& eig) {
  const double norm = spectral_radius(eig.values);
  const double lowest = eig.values[0];
  if (lowest < -1e-6 * norm) {
    std::ostringstream msg;
    msg << "matrix is not positive semidefinite (min eigenvalue " << lowest
        << ", spectral norm " << norm << ")";
    throw ValidationError(msg.str());
  }
  return eig.values.cwiseMax(0.0);
}

}  // namespace

EigenPair top_eigenpair(const SymMatrix& m, double tol) {
  if (!(tol > 0)) throw ValidationError("eigenpair tolerance must be positive");
  const SymEigen eig = eigen_decompose(m);
  const Eigen::Index last = eig.values.size() - 1;
  EigenPair out{eig.values[last], eig.vectors.col(last).normalized()};
  fix_sign(out.vector);
  const double residual = (m.dense() * out.vector - out.value * out.vector).norm();
  if (residual > tol * std::max(1.0, std::abs(out.value))) {
    std::ostringstream msg;
    msg << "top eigenpair residual " << residual << " exceeds tolerance " << tol;
    throw ConvergenceError(msg.str());
  }
  return out;
}

SymMatrix psd_sqrt(const SymMatrix& m) {
  const SymEigen eig = eigen_decompose(m);
  Eigen::VectorXd values = clipped_spectrum(eig);
  // Roundoff-level eigenvalues would otherwise leak in at their square root.
  const double floor = m.dim() * std::numeric_limits<double>::epsilon() * spectral_radius(eig.values);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] <= floor) values[i] = 0.0;
  }
  const Eigen::VectorXd roots = values.cwiseSqrt();
  return SymMatrix(eig.vectors * roots.asDiagonal() * eig.vectors.transpose());
}

Eigen::MatrixXd psd_factor(const SymMatrix& m, double rel_tol) {
  const SymEigen eig = eigen_decompose(m);
  const Eigen::VectorXd values = clipped_spectrum(eig);
  const double top = values[values.size() - 1];
  std::vector<Eigen::Index> kept;
  if (top > 0) {
    for (Eigen::Index i = values.size() - 1; i >= 0; --i) {
      if (values[i] > rel_tol * top) kept.push_back(i);
    }
  }
  Eigen::MatrixXd factor(static_cast<Eigen::Index>(kept.size()), m.dim());
  for (std::size_t r = 0; r < kept.size(); ++r) {
    factor.row(static_cast<Eigen::Index>(r)) =
        std::sqrt(values[kept[r]]) * eig.vectors.col(kept[r]).transpose();
  }
  return factor;
}

Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& v, double cap) {
  const Eigen::Index count = v.size();
  if (count == 0 || !(cap > 0)) {
    throw InfeasibleError("capped simplex needs a positive cap and a non-empty vector");
  }
  if (cap * static_cast<double>(count) < 1.0 - 1e-12) {
    std::ostringstream msg;
    msg << "capped simplex is empty: cap " << cap << " times length " << count << " < 1";
    throw InfeasibleError(msg.str());
  }
  if (cap * static_cast<double>(count) <= 1.0 + 1e-12) {
    return Eigen::VectorXd::Constant(count, 1.0 / static_cast<double>(count));
  }
  const double effective_cap = std::min(cap, 1.0);

  // Total mass as a function of the shift theta is nonincreasing and
  // piecewise linear with kinks at v_i - cap and v_i.
  auto mass = [&](double theta) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < count; ++i) {
      total += std::clamp(v[i] - theta, 0.0, effective_cap);
    }
    return total;
  };
  std::vector<double> kinks;
  kinks.reserve(2 * static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) {
    kinks.push_back(v[i] - effective_cap);
    kinks.push_back(v[i]);
  }
  std::sort(kinks.begin(), kinks.end());

  // Largest kink index with mass >= 1; mass(kinks.front()) = count*cap >= 1.
  std::size_t lo = 0;
  std::size_t hi = kinks.size() - 1;  // mass(kinks.back()) = 0
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (mass(kinks[mid]) >= 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double left = kinks[lo];
  const double right = kinks[hi];
  const double probe = 0.5 * (left + right);
  double active_sum = 0.0;
  double saturated = 0.0;
  int active = 0;
  for (Eigen::Index i = 0; i < count; ++i) {
    const double shifted = v[i] - probe;
    if (shifted >= effective_cap) {
      saturated += effective_cap;
    } else if (shifted > 0) {
      active_sum += v[i];
      ++active;
    }
  }
  const double theta = active > 0 ? (active_sum + saturated - 1.0) / active : probe;

  Eigen::VectorXd w(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    w[i] = std::clamp(v[i] - theta, 0.0, effective_cap);
  }
  return w;
}

double chi2_cdf(int d, double x) {
  if (d < 1) throw ValidationError("chi-square degrees of freedom must be positive");
  if (x <= 0) return 0.0;
  return boost::math::gamma_p(0.5 * d, 0.5 * x);
}

double chi2_inv_cdf(int d, double p) {
  if (d < 1) throw ValidationError("chi-square degrees of freedom must be positive");
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError("chi-square quantile needs probability strictly inside (0, 1)");
  }
  const double shape = 0.5 * d;
  auto density = [&](double x) { return 0.5 * boost::math::gamma_p_derivative(shape, 0.5 * x); };

  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(d));
  while (chi2_cdf(d, hi) < p) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw ConvergenceError("chi-square quantile bracket diverged");
  }
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double residual = chi2_cdf(d, x) - p;
    if (std::abs(residual) <= 1e-15) return x;
    if (residual > 0) {
      hi = x;
    } else {
      lo = x;
    }
    const double slope = density(x);
    double next = slope > 0 ? x - residual / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, x)) return next;
    x = next;
  }
  if (std::abs(chi2_cdf(d, x) - p) <= 1e-9) return x;
  throw ConvergenceError("chi-square quantile did not converge");
}

}  // namespace msod
