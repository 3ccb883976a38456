#include "msod/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lambda_max_ipm.hpp"
#include "msod/errors.hpp"

namespace msod {

namespace {

void require_guard(int n, int limit, const char* what) {
  check_enumerable(n);
  if (n > limit) {
    throw ValidationError(std::string(what) + " enumerates every partition and is limited to n <= " +
                          std::to_string(limit) + " (got n = " + std::to_string(n) +
                          "); use a heuristic mode such as icmsod with a small T");
  }
}

double top_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()[m.rows() - 1];
}

void check_cap(double cap, std::size_t count) {
  if (!(cap > 0.0) || !std::isfinite(cap)) throw ValidationError("cap must be positive");
  if (count == 0) throw ValidationError("candidate pool is empty");
  if (std::min(cap, 1.0) * static_cast<double>(count) < 1.0 - 1e-12) {
    std::ostringstream msg;
    msg << "T = " << count << " pairs with cap alpha = " << cap
        << "; the inference constraint needs T >= 1/alpha";
    throw InfeasibleError(msg.str());
  }
}

// Core solver on explicit factors: column t is a_t, so G = a^T a.
CappedSimplexSolution solve_factored(const Eigen::MatrixXd& a_in, double cap) {
  const auto count = static_cast<std::size_t>(a_in.cols());
  check_cap(cap, count);
  const Eigen::Index t_count = a_in.cols();
  Eigen::MatrixXd a = a_in;

  auto evaluate = [&](const Eigen::VectorXd& v) {
    return std::max(0.0, top_eigenvalue(a * v.asDiagonal() * a.transpose()));
  };

  CappedSimplexSolution out;
  if (t_count == 1) {
    out.v = Eigen::VectorXd::Ones(1);
    out.lambda_star = evaluate(out.v);
    return out;
  }
  if (cap * static_cast<double>(t_count) <= 1.0 + 1e-12) {
    out.v = Eigen::VectorXd::Constant(t_count, 1.0 / static_cast<double>(t_count));
    out.lambda_star = evaluate(out.v);
    return out;
  }

  const Eigen::VectorXd norms = a.colwise().squaredNorm().transpose();
  const double largest = a.rows() == 0 ? 0.0 : norms.maxCoeff();
  std::vector<Eigen::Index> zero_columns;
  for (Eigen::Index t = 0; t < t_count; ++t) {
    if (largest == 0.0 || norms[t] <= 1e-14 * largest) zero_columns.push_back(t);
  }
  const double eff_cap = std::min(cap, 1.0);
  if (static_cast<double>(zero_columns.size()) * eff_cap >= 1.0 - 1e-12) {
    out.v = Eigen::VectorXd::Zero(t_count);
    double remaining = 1.0;
    for (Eigen::Index t : zero_columns) {
      const double take = std::min(eff_cap, remaining);
      out.v[t] = take;
      remaining -= take;
      if (remaining <= 0.0) break;
    }
    out.lambda_star = evaluate(out.v);
    return out;
  }
  for (Eigen::Index t : zero_columns) a.col(t).setZero();

  const double scale = std::sqrt(largest);
  const Eigen::MatrixXd scaled = a / scale;
  const detail::IpmResult ipm = detail::solve_capped_lambda_max(scaled, cap);

  out.v = project_capped_simplex(ipm.weights, cap);
  out.iterations = ipm.iterations;
  out.lambda_star = evaluate(out.v);

  const Eigen::VectorXd c =
      (scaled.array() * (ipm.dual * scaled).array()).colwise().sum().transpose();
  const double bound = capped_dual_bound(c, cap) * largest;
  out.kkt_gap = std::max(0.0, out.lambda_star - bound);
  if (out.kkt_gap > 1e-6 * out.lambda_star + 1e-14 * largest) {
    std::ostringstream msg;
    msg.precision(10);
    msg << "capped lambda_max solver stopped with gap " << out.kkt_gap << " at lambda "
        << out.lambda_star << " after " << ipm.iterations << " iterations";
    throw ConvergenceError(msg.str());
  }
  return out;
}

// Keeps weights >= 1e-12 and restores feasibility on that support.
std::vector<std::pair<Assignment, double>> sparse_support(const std::vector<Assignment>& reps,
                                                          const Eigen::VectorXd& v, double cap) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index t = 0; t < v.size(); ++t) {
    if (v[t] >= 1e-12) keep.push_back(t);
  }
  Eigen::VectorXd kept(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) kept[static_cast<Eigen::Index>(i)] = v[keep[i]];
  if (std::min(cap, 1.0) * static_cast<double>(keep.size()) >= 1.0) {
    kept = project_capped_simplex(kept, cap);
  }
  std::vector<std::pair<Assignment, double>> support;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    support.emplace_back(reps[static_cast<std::size_t>(keep[i])], kept[static_cast<Eigen::Index>(i)]);
  }
  return support;
}

}  // namespace

Eigen::MatrixXd CandidatePool::matrix() const {
  if (u.empty()) return {};
  Eigen::MatrixXd m(u.front().n(), static_cast<Eigen::Index>(u.size()));
  for (std::size_t t = 0; t < u.size(); ++t) m.col(static_cast<Eigen::Index>(t)) = u[t].vector();
  return m;
}

double quadratic_objective(const SymMatrix& k, const std::vector<std::int8_t>& w) {
  const int n = k.dim();
  std::vector<double> r(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    const double s = w[static_cast<std::size_t>(j)];
    for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] += s * k(i, j);
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += w[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
  return total;
}

double quadratic_objective(const GramMatrix& gram, const Assignment& w) {
  if (w.n() != gram.n()) throw ValidationError("assignment length does not match the Gram matrix");
  return quadratic_objective(gram.matrix(), w.values());
}

Assignment best_assignment(const GramMatrix& gram) {
  const int n = gram.n();
  require_guard(n, kEnumerationGuard, "best_assignment");
  const SymMatrix& k = gram.matrix();
  const int half = n / 2;

  // Smallest eigenvalue of each trailing block K[k:, k:].
  std::vector<double> tail_floor(static_cast<std::size_t>(n) + 1, 0.0);
  for (int d = 0; d < n; ++d) {
    const Eigen::MatrixXd block = k.dense().bottomRightCorner(n - d, n - d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block, Eigen::EigenvaluesOnly);
    tail_floor[static_cast<std::size_t>(d)] = std::max(0.0, eig.eigenvalues()[0]) * (n - d);
  }
  const double slack = 1e-9 * (1.0 + n * k.dense().cwiseAbs().maxCoeff());

  std::vector<std::vector<double>> r(static_cast<std::size_t>(n) + 1,
                                     std::vector<double>(static_cast<std::size_t>(n), 0.0));
  std::vector<std::int8_t> w(static_cast<std::size_t>(n), 0);
  std::vector<std::int8_t> best_w;
  double best = std::numeric_limits<double>::infinity();

  // partial = sum_{i,j<depth} w_i w_j K_ij, maintained incrementally for
  // pruning only; leaves are re-evaluated from r exactly like
  // quadratic_objective.
  auto dfs = [&](auto&& self, int depth, int plus_left, int minus_left, double partial) -> void {
    const auto& rd = r[static_cast<std::size_t>(depth)];
    if (depth == n) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) total += w[static_cast<std::size_t>(i)] * rd[static_cast<std::size_t>(i)];
      if (total < best) {
        best = total;
        best_w = w;
      }
      return;
    }
    double linear = 0.0;
    for (int j = depth; j < n; ++j) linear += std::abs(rd[static_cast<std::size_t>(j)]);
    const double bound = partial - 2.0 * linear + tail_floor[static_cast<std::size_t>(depth)];
    if (bound > best + slack) return;

    for (int s : {1, -1}) {
      if (s == 1 && plus_left == 0) continue;
      if (s == -1 && minus_left == 0) continue;
      w[static_cast<std::size_t>(depth)] = static_cast<std::int8_t>(s);
      auto& next = r[static_cast<std::size_t>(depth) + 1];
      for (int i = 0; i < n; ++i) {
        next[static_cast<std::size_t>(i)] = rd[static_cast<std::size_t>(i)] + s * k(i, depth);
      }
      const double grown = partial + 2.0 * s * rd[static_cast<std::size_t>(depth)] + k(depth, depth);
      self(self, depth + 1, plus_left - (s == 1), minus_left - (s == -1), grown);
    }
  };
  w[0] = 1;
  for (int i = 0; i < n; ++i) r[1][static_cast<std::size_t>(i)] = r[0][static_cast<std::size_t>(i)] + k(i, 0);
  dfs(dfs, 1, half - 1, half, k(0, 0));
  return Assignment(best_w);
}

CandidatePool top_assignments(const GramMatrix& gram, int t_count) {
  const int n = gram.n();
  require_guard(n, kTopAssignmentsMaxN, "top_assignments");
  if (t_count < 1) throw ValidationError("T must be a positive integer");
  if (t_count > kTopAssignmentsMaxT) {
    throw ValidationError("T = " + std::to_string(t_count) + " exceeds the limit of " +
                          std::to_string(kTopAssignmentsMaxT) + " candidate pairs");
  }
  std::vector<Assignment> reps = enumerate_representatives(n);
  std::vector<double> values(reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i) values[i] = quadratic_objective(gram.matrix(), reps[i].values());
  // reps is already in lex order, so a stable sort by value breaks ties lexically.
  std::vector<std::size_t> order(reps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  CandidatePool pool;
  const std::size_t take = std::min(order.size(), static_cast<std::size_t>(t_count));
  pool.truncated = take < static_cast<std::size_t>(t_count);
  for (std::size_t i = 0; i < take; ++i) {
    pool.u.push_back(reps[order[i]]);
    pool.objective_values.push_back(values[order[i]]);
  }
  return pool;
}

CappedSimplexSolution minimize_lambda_max_capped(const SymMatrix& g, double cap) {
  if (g.dim() == 0) throw ValidationError("candidate pool is empty");
  check_cap(cap, static_cast<std::size_t>(g.dim()));
  return solve_factored(psd_factor(g), cap);
}

CappedSimplexSolution minimize_lambda_max_capped(const CandidatePool& pool, const GramMatrix& gram,
                                                 double cap) {
  if (pool.u.empty()) throw ValidationError("candidate pool is empty");
  if (pool.u.front().n() != gram.n()) throw ValidationError("pool and Gram matrix sizes differ");
  check_cap(cap, pool.u.size());
  return solve_factored(psd_factor(gram.matrix()) * pool.matrix(), cap);
}

double reduced_lambda_max(const SymMatrix& g, const Eigen::VectorXd& v) {
  if (v.size() != g.dim()) throw ValidationError("weight vector length does not match G");
  const Eigen::VectorXd root = v.cwiseMax(0.0).cwiseSqrt();
  return top_eigenvalue(root.asDiagonal() * g.dense() * root.asDiagonal());
}

Eigen::VectorXd lambda_max_subgradient(const SymMatrix& g, const Eigen::VectorXd& v) {
  if (v.size() != g.dim()) throw ValidationError("weight vector length does not match G");
  const Eigen::VectorXd root = v.cwiseMax(0.0).cwiseSqrt();
  const SymMatrix m(root.asDiagonal() * g.dense() * root.asDiagonal());
  const EigenPair top = top_eigenpair(m);
  if (top.value <= 0.0) return Eigen::VectorXd::Zero(v.size());
  const Eigen::VectorXd projected = g.dense() * (root.asDiagonal() * top.vector);
  return projected.array().square() / top.value;
}

double capped_dual_bound(const Eigen::VectorXd& c, double cap) {
  std::vector<double> sorted(c.data(), c.data() + c.size());
  std::sort(sorted.begin(), sorted.end());
  const double eff = std::min(cap, 1.0);
  double remaining = 1.0;
  double total = 0.0;
  for (double value : sorted) {
    const double take = std::min(eff, remaining);
    total += take * value;
    remaining -= take;
    if (remaining <= 1e-15) break;
  }
  return total;
}

Design msod_exact(const GramMatrix& gram) {
  const int n = gram.n();
  require_guard(n, kMsodExactMaxN, "msod_exact");
  const std::vector<Assignment> reps = enumerate_representatives(n);
  Eigen::MatrixXd u(n, static_cast<Eigen::Index>(reps.size()));
  for (std::size_t t = 0; t < reps.size(); ++t) u.col(static_cast<Eigen::Index>(t)) = reps[t].vector();
  const CappedSimplexSolution sol = solve_factored(psd_factor(gram.matrix()) * u, 1.0);
  return design_from_support(sparse_support(reps, sol.v, 1.0));
}

Design icmsod(const GramMatrix& gram, double alpha, int t_count) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");
  if (t_count < 1) throw ValidationError("T must be a positive integer");
  check_cap(alpha, static_cast<std::size_t>(t_count));
  const CandidatePool pool = top_assignments(gram, t_count);
  const CappedSimplexSolution sol = minimize_lambda_max_capped(pool, gram, alpha);
  return design_from_support(sparse_support(pool.u, sol.v, alpha));
}

}  // namespace msod
