#pragma once

// Test-side reference implementations. They share no code with the library
// beyond plain Eigen storage: slow, obvious, and independent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Cyclic Jacobi rotations; eigenvalues ascending.
inline Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a, int sweeps = 100) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  Eigen::VectorXd d = a.diagonal();
  std::sort(d.data(), d.data() + d.size());
  return d;
}

inline double jacobi_max(const Eigen::MatrixXd& a) {
  const Eigen::VectorXd d = jacobi_eigenvalues(a);
  return d[d.size() - 1];
}

// Every balanced +-1 vector, built from bitmasks, in the "+1 before -1"
// lexicographic order.
inline std::vector<std::vector<int>> balanced_vectors(int n) {
  std::vector<std::vector<int>> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != n / 2) continue;
    std::vector<int> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = (mask >> (n - 1 - i)) & 1u ? 1 : -1;
    out.push_back(w);
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

inline std::vector<std::vector<int>> canonical_vectors(int n) {
  std::vector<std::vector<int>> out;
  for (auto& w : balanced_vectors(n))
    if (w[0] == 1) out.push_back(w);
  return out;
}

inline Eigen::VectorXd as_vector(const std::vector<int>& w) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) v[static_cast<Eigen::Index>(i)] = w[i];
  return v;
}

inline double quad(const Eigen::MatrixXd& k, const std::vector<int>& w) {
  const Eigen::VectorXd v = as_vector(w);
  return v.dot(k * v);
}

// Exclusion-cut iteration: W_t = argmin over the remaining canonical set,
// then keep only W with <W_t, W> <= n - 4. Ties go to the lex-smallest.
inline std::vector<std::vector<int>> exclusion_cut_pool(const Eigen::MatrixXd& k, int t_count) {
  const int n = static_cast<int>(k.rows());
  std::vector<std::vector<int>> remaining = canonical_vectors(n);
  std::vector<std::vector<int>> pool;
  while (static_cast<int>(pool.size()) < t_count && !remaining.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < remaining.size(); ++i) {
      if (quad(k, remaining[i]) < quad(k, remaining[best]) - 1e-12) best = i;
    }
    const std::vector<int> chosen = remaining[best];
    pool.push_back(chosen);
    std::vector<std::vector<int>> next;
    for (auto& w : remaining) {
      if (as_vector(w).dot(as_vector(chosen)) <= n - 4) next.push_back(w);
    }
    remaining.swap(next);
  }
  return pool;
}

// lambda_max(diag(sqrt v) G diag(sqrt v)) through Jacobi.
inline double reduced_lambda(const Eigen::MatrixXd& g, const Eigen::VectorXd& v) {
  const Eigen::VectorXd r = v.cwiseSqrt();
  return jacobi_max(r.asDiagonal() * g * r.asDiagonal());
}

// Minimum of reduced_lambda over the grid {v = k * step, sum 1, v <= cap}.
inline double grid_search(const Eigen::MatrixXd& g, double cap, double step) {
  const Eigen::Index t = g.rows();
  const int ticks = static_cast<int>(std::lround(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd v(t);
  std::function<void(Eigen::Index, int)> rec = [&](Eigen::Index i, int left) {
    if (i == t - 1) {
      v[i] = left * step;
      if (v.maxCoeff() <= cap + 1e-12) best = std::min(best, reduced_lambda(g, v));
      return;
    }
    for (int k = 0; k <= left; ++k) {
      v[i] = k * step;
      rec(i + 1, left - k);
    }
  };
  rec(0, ticks);
  return best;
}

// Chi-square CDF by composite Simpson on x = u^2, which removes the
// singularity at zero for d = 1.
inline double chi2_cdf(int d, double x) {
  if (x <= 0) return 0.0;
  const double umax = std::sqrt(x);
  const int steps = 20000;
  const double h = umax / steps;
  const double norm = std::pow(2.0, 0.5 * d) * std::tgamma(0.5 * d);
  auto f = [&](double u) { return 2.0 * std::pow(u, d - 1) * std::exp(-0.5 * u * u) / norm; };
  double s = f(0.0) + f(umax);
  for (int i = 1; i < steps; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

inline double chi2_quantile(int d, double p) {
  double lo = 0.0;
  double hi = 1.0;
  while (chi2_cdf(d, hi) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf(d, mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Projection onto the capped simplex by bisection on the shift.
inline Eigen::VectorXd capped_projection(const Eigen::VectorXd& v, double cap) {
  double lo = v.minCoeff() - cap - 1.0;
  double hi = v.maxCoeff() + 1.0;
  auto mass = [&](double th) { return (v.array() - th).min(cap).max(0.0).sum(); };
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > 1.0 ? lo : hi) = mid;
  }
  const double th = 0.5 * (lo + hi);
  return (v.array() - th).min(cap).max(0.0);
}

inline Eigen::MatrixXd random_psd(int n, int rank, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd f(rank, n);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < n; ++j) f(i, j) = normal(rng);
  return f.transpose() * f;
}

}  // namespace oracle
