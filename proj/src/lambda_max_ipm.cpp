#include "lambda_max_ipm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msod::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Largest alpha with m + alpha * dm still PSD (m positive definite).
double max_step_psd(const Eigen::MatrixXd& m, const Eigen::MatrixXd& dm) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return 0.0;
  const auto lower = llt.matrixL();
  const Eigen::MatrixXd left = lower.solve(dm);
  const Eigen::MatrixXd scaled = sym(lower.solve(left.transpose()).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled, Eigen::EigenvaluesOnly);
  const double lowest = eig.eigenvalues()[0];
  return lowest < 0 ? -1.0 / lowest : kInf;
}

double max_step_lp(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double step = kInf;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0) step = std::min(step, -v[i] / dv[i]);
  }
  return step;
}

// a_t^T Z a_t for every column t (Z need not be symmetric).
Eigen::VectorXd column_forms(const Eigen::MatrixXd& a, const Eigen::MatrixXd& z) {
  return (a.array() * (z * a).array()).colwise().sum().transpose();
}

struct Iterate {
  Eigen::MatrixXd X, S;
  Eigen::VectorXd x1, s1, x2, s2, y;
};

struct Direction {
  Eigen::MatrixXd dX, dS;
  Eigen::VectorXd dx1, ds1, dx2, ds2, dy;
};

}  // namespace

IpmResult solve_capped_lambda_max(const Eigen::MatrixXd& a, double cap, int max_iterations) {
  const Eigen::Index r = a.rows();
  const Eigen::Index count = a.cols();
  const bool capped = cap < 1.0;
  const Eigen::Index lp_cap = capped ? count : 0;
  const double dim = static_cast<double>(r + count + lp_cap);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(r, r);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(count);

  const double start = 10.0;
  Iterate it;
  it.X = start * eye;
  it.S = start * eye;
  it.x1 = Eigen::VectorXd::Constant(count, start);
  it.s1 = Eigen::VectorXd::Constant(count, start);
  it.x2 = Eigen::VectorXd::Constant(lp_cap, start);
  it.s2 = Eigen::VectorXd::Constant(lp_cap, start);
  it.y = Eigen::VectorXd::Zero(count);

  auto apply_a = [&](const Eigen::MatrixXd& z, const Eigen::VectorXd& z1,
                     const Eigen::VectorXd& z2) {
    Eigen::VectorXd out = column_forms(a, z) - z1;
    if (capped) out += z2 - Eigen::VectorXd::Constant(count, cap * z2.sum());
    return out;
  };

  IpmResult best;
  double best_score = kInf;
  int stalled = 0;
  auto record = [&](const Iterate& state, double score, int iteration) {
    best_score = score;
    best.weights = state.y.cwiseMax(0.0);
    const double total = best.weights.sum();
    if (total > 0) {
      best.weights /= total;
    } else {
      best.weights = ones / static_cast<double>(count);
    }
    best.dual = sym(state.X) / state.X.trace();
    best.iterations = iteration;
  };

  for (int iteration = 0; iteration <= max_iterations; ++iteration) {
    Iterate& s = it;
    const Eigen::VectorXd rp =
        ones - apply_a(s.X, s.x1, capped ? s.x2 : Eigen::VectorXd());
    const Eigen::MatrixXd rs = eye - a * s.y.asDiagonal() * a.transpose() - s.S;
    const Eigen::VectorXd r1 = s.y - s.s1;
    Eigen::VectorXd r2;
    if (capped) r2 = Eigen::VectorXd::Constant(count, cap * s.y.sum()) - s.y - s.s2;

    const double gap = s.X.cwiseProduct(s.S).sum() + s.x1.dot(s.s1) + (capped ? s.x2.dot(s.s2) : 0.0);
    const double mu = gap / dim;
    const double pobj = s.X.trace();
    const double dobj = s.y.sum();
    const double scale = 1.0 + std::abs(pobj) + std::abs(dobj);
    const double rel_gap = std::max(gap, std::abs(pobj - dobj)) / scale;
    // Residuals relative to the size of the terms that produced them.
    const double pinf = rp.lpNorm<Eigen::Infinity>() /
                        (1.0 + column_forms(a, s.X).maxCoeff() + s.x1.maxCoeff());
    const double dinf =
        std::max({rs.lpNorm<Eigen::Infinity>(), r1.lpNorm<Eigen::Infinity>(),
                  capped ? r2.lpNorm<Eigen::Infinity>() : 0.0}) /
        (1.0 + std::abs(dobj) * (1.0 + cap));
    const double score = std::max({rel_gap, pinf, dinf});
    if (!std::isfinite(score) || !(mu > 0.0)) break;
    if (score < best_score) {
      record(s, score, iteration);
      stalled = 0;
    } else if (++stalled >= 8) {
      break;
    }
    if (rel_gap < 1e-13 && pinf < 1e-12 && dinf < 1e-12) {
      best.converged = true;
      break;
    }
    if (iteration == max_iterations) break;

    Eigen::LLT<Eigen::MatrixXd> s_llt(s.S);
    if (s_llt.info() != Eigen::Success) break;
    const Eigen::MatrixXd s_inv = s_llt.solve(eye);

    const Eigen::MatrixXd xa = s.X * a;
    const Eigen::MatrixXd sa = s_inv * a;
    Eigen::MatrixXd schur = (a.transpose() * xa).cwiseProduct(a.transpose() * sa);
    schur.diagonal() += s.x1.cwiseQuotient(s.s1);
    if (capped) {
      const Eigen::VectorXd d2 = s.x2.cwiseQuotient(s.s2);
      schur.diagonal() += d2;
      schur -= cap * (d2 * ones.transpose() + ones * d2.transpose());
      schur.array() += cap * cap * d2.sum();
    }
    Eigen::LLT<Eigen::MatrixXd> schur_llt(schur);
    if (schur_llt.info() != Eigen::Success) {
      const double shift = 1e-14 * std::max(1.0, schur.diagonal().maxCoeff());
      schur.diagonal().array() += shift;
      schur_llt.compute(schur);
      if (schur_llt.info() != Eigen::Success) break;
    }

    const Eigen::MatrixXd xrs = s.X * rs * s_inv;
    const Eigen::VectorXd lp1 = s.x1.cwiseProduct(r1).cwiseQuotient(s.s1);
    Eigen::VectorXd lp2;
    if (capped) lp2 = s.x2.cwiseProduct(r2).cwiseQuotient(s.s2);
    const Eigen::VectorXd fixed_rhs = rp + apply_a(xrs, lp1, lp2);

    auto solve = [&](const Eigen::MatrixXd& rc, const Eigen::VectorXd& rc1,
                     const Eigen::VectorXd& rc2) {
      Direction d;
      d.dy = schur_llt.solve(fixed_rhs - apply_a(rc, rc1, rc2));
      d.dS = rs - a * d.dy.asDiagonal() * a.transpose();
      d.ds1 = r1 + d.dy;
      d.dX = rc - sym(s.X * d.dS * s_inv);
      d.dx1 = rc1 - s.x1.cwiseProduct(d.ds1).cwiseQuotient(s.s1);
      if (capped) {
        d.ds2 = r2 - d.dy + Eigen::VectorXd::Constant(count, cap * d.dy.sum());
        d.dx2 = rc2 - s.x2.cwiseProduct(d.ds2).cwiseQuotient(s.s2);
      }
      return d;
    };
    auto primal_step = [&](const Direction& d) {
      double step = max_step_psd(s.X, d.dX);
      step = std::min(step, max_step_lp(s.x1, d.dx1));
      if (capped) step = std::min(step, max_step_lp(s.x2, d.dx2));
      return step;
    };
    auto dual_step = [&](const Direction& d) {
      double step = max_step_psd(s.S, d.dS);
      step = std::min(step, max_step_lp(s.s1, d.ds1));
      if (capped) step = std::min(step, max_step_lp(s.s2, d.ds2));
      return step;
    };

    // Predictor.
    const Direction affine = solve(-s.X, -s.x1, capped ? Eigen::VectorXd(-s.x2) : Eigen::VectorXd());
    const double ap = std::min(1.0, primal_step(affine));
    const double ad = std::min(1.0, dual_step(affine));
    double mu_affine = (s.X + ap * affine.dX).cwiseProduct(s.S + ad * affine.dS).sum() +
                       (s.x1 + ap * affine.dx1).dot(s.s1 + ad * affine.ds1);
    if (capped) mu_affine += (s.x2 + ap * affine.dx2).dot(s.s2 + ad * affine.ds2);
    mu_affine /= dim;
    const double sigma = std::clamp(std::pow(std::max(mu_affine, 0.0) / mu, 3.0), 0.0, 1.0);

    // Corrector.
    const Eigen::MatrixXd rc = sigma * mu * s_inv - s.X - sym(affine.dX * affine.dS * s_inv);
    const Eigen::VectorXd rc1 = (Eigen::VectorXd::Constant(count, sigma * mu) -
                                 affine.dx1.cwiseProduct(affine.ds1))
                                    .cwiseQuotient(s.s1) -
                                s.x1;
    Eigen::VectorXd rc2;
    if (capped) {
      rc2 = (Eigen::VectorXd::Constant(count, sigma * mu) - affine.dx2.cwiseProduct(affine.ds2))
                .cwiseQuotient(s.s2) -
            s.x2;
    }
    const Direction step = solve(rc, rc1, rc2);
    const double gamma = 0.9 + 0.09 * std::min(ap, ad);
    const double alpha_p = std::min(1.0, gamma * primal_step(step));
    const double alpha_d = std::min(1.0, gamma * dual_step(step));
    if (alpha_p < 1e-12 && alpha_d < 1e-12) break;

    s.X = sym(s.X + alpha_p * step.dX);
    s.x1 += alpha_p * step.dx1;
    s.S = sym(s.S + alpha_d * step.dS);
    s.s1 += alpha_d * step.ds1;
    s.y += alpha_d * step.dy;
    if (capped) {
      s.x2 += alpha_p * step.dx2;
      s.s2 += alpha_d * step.ds2;
    }
  }
  return best;
}

}  // namespace msod::detail
