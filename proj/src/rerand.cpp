#include "msod/rerand.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "msod/errors.hpp"

namespace msod {

namespace {

double distance(const std::vector<std::int8_t>& w, const Eigen::MatrixXd& x,
                const Eigen::MatrixXd& omega) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (w[static_cast<std::size_t>(i)] > 0) {
      v += x.row(i).transpose();
    } else {
      v -= x.row(i).transpose();
    }
  }
  return std::max(0.0, v.dot(omega * v));
}

std::string format_distance(double d) {
  std::ostringstream out;
  out.precision(10);
  out << d;
  return out.str();
}

}  // namespace

void validate(const RerandSpec& spec) {
  if (spec.a.has_value() == spec.p_a.has_value()) {
    throw ValidationError("rerandomization needs exactly one of a and p_a");
  }
  if (spec.a && !(*spec.a >= 0.0)) throw ValidationError("threshold a must be nonnegative");
  if (spec.p_a && !(*spec.p_a > 0.0 && *spec.p_a < 1.0)) {
    throw ValidationError("acceptance probability p_a must lie in (0, 1)");
  }
  if (spec.max_draws && *spec.max_draws < 1) throw ValidationError("max_draws must be at least 1");
}

std::int64_t effective_max_draws(const RerandSpec& spec) {
  if (spec.max_draws) return *spec.max_draws;
  if (spec.p_a) return static_cast<std::int64_t>(std::ceil(100.0 / *spec.p_a));
  return 1'000'000;
}

double mahalanobis_distance(const Assignment& w, const CovariateMatrix& x, const SymMatrix& omega) {
  if (w.n() != x.n()) throw ValidationError("assignment length does not match covariates");
  if (omega.dim() != x.d()) throw ValidationError("Omega dimension does not match covariates");
  return distance(w.values(), x.values(), omega.dense());
}

double threshold_from_pa(int d, double p_a) {
  if (!(p_a > 0.0) || p_a >= 1.0 - 1e-12) {
    throw ValidationError("p_a must lie in (0, 1 - 1e-12)");
  }
  return chi2_inv_cdf(d, p_a);
}

double resolve_threshold(const RerandSpec& spec, const CovariateMatrix& x) {
  validate(spec);
  if (spec.a) return *spec.a;
  return x.n() * threshold_from_pa(x.d(), *spec.p_a);
}

RerandDraw sample_rerandomization(const CovariateMatrix& x, const RerandSpec& spec,
                                  std::uint64_t seed) {
  const double a = resolve_threshold(spec, x);
  const std::int64_t limit = effective_max_draws(spec);
  const Eigen::MatrixXd omega = resolve_omega(spec.omega, x).dense();
  Rng rng(seed);
  const int n = x.n();
  std::vector<std::int8_t> w(static_cast<std::size_t>(n), -1);
  std::fill(w.begin(), w.begin() + n / 2, std::int8_t{1});
  double smallest = std::numeric_limits<double>::infinity();
  for (std::int64_t draw = 1; draw <= limit; ++draw) {
    std::shuffle(w.begin(), w.end(), rng);
    const double d = distance(w, x.values(), omega);
    if (d <= a) return {Assignment(w), draw};
    smallest = std::min(smallest, d);
  }
  throw InfeasibleError("rerandomization rejected all " + std::to_string(limit) +
                        " draws; smallest D_Omega seen was " + format_distance(smallest) +
                        " against threshold " + format_distance(a));
}

Design exact_rerandomization_design(const CovariateMatrix& x, const RerandSpec& spec) {
  check_enumerable(x.n());
  const double a = resolve_threshold(spec, x);
  const Eigen::MatrixXd omega = resolve_omega(spec.omega, x).dense();
  std::vector<Assignment> accepted;
  double smallest = std::numeric_limits<double>::infinity();
  for_each_representative(x.n(), [&](const std::vector<std::int8_t>& w) {
    const double d = distance(w, x.values(), omega);
    smallest = std::min(smallest, d);
    if (d <= a) accepted.emplace_back(w);
  });
  if (accepted.empty()) {
    throw InfeasibleError("rerandomization acceptance region is empty: min D_Omega = " +
                          format_distance(smallest) + " exceeds threshold " + format_distance(a));
  }
  const double mass = 1.0 / static_cast<double>(accepted.size());
  std::vector<SignPair> pairs;
  pairs.reserve(accepted.size());
  for (auto& w : accepted) pairs.push_back({std::move(w), mass});
  return Design::from_pairs(x.n(), std::move(pairs));
}

}  // namespace msod
