#pragma once

#include <cstdint>
#include <optional>

#include "msod/designs.hpp"
#include "msod/kernels.hpp"

namespace msod {

// Accept W when D_Omega(W) <= a. Exactly one of a, p_a is set; with p_a the
// threshold is n * chi2_inv_cdf(d, p_a), because D_Omega / n is
// asymptotically chi-square with d degrees of freedom under complete
// randomization when Omega is the inverse sample covariance.
struct RerandSpec {
  OmegaSpec omega;
  std::optional<double> a;
  std::optional<double> p_a;
  std::optional<std::int64_t> max_draws;  // default ceil(100 / p_a), else 10^6
};

void validate(const RerandSpec& spec);
std::int64_t effective_max_draws(const RerandSpec& spec);

// D_Omega(W) = <W, X Omega X^T W>.
double mahalanobis_distance(const Assignment& w, const CovariateMatrix& x, const SymMatrix& omega);

double threshold_from_pa(int d, double p_a);
double resolve_threshold(const RerandSpec& spec, const CovariateMatrix& x);

struct RerandDraw {
  Assignment w;
  std::int64_t draws_used = 0;
};

// Rejection sampling from uniform balanced proposals. Throws InfeasibleError
// with the smallest distance seen when max_draws is exhausted.
RerandDraw sample_rerandomization(const CovariateMatrix& x, const RerandSpec& spec,
                                  std::uint64_t seed);

// Uniform design over every accepted sign-pair (n within the enumeration guard).
Design exact_rerandomization_design(const CovariateMatrix& x, const RerandSpec& spec);

}  // namespace msod
