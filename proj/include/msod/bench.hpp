#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "msod/designs.hpp"
#include "msod/inference.hpp"
#include "msod/kernels.hpp"
#include "msod/rerand.hpp"
#include "msod/risk.hpp"

namespace msod {

// X_i = sum_{t=0}^{b - max(2, log2 i)} (-1)^ceil(i / 2^(b-t-1))
//       * 2^(-2^(b-1) + 2^(b-t-1) + ((i-1) mod 2^(b-t-1))),  i = 1..2^b.
CovariateMatrix example1_covariates(int b);

// The balanced vector (-1, 1, -1, 1, ...) that example1_covariates is built
// around.
Assignment example1_partition(int b);

// How to build a design from covariates.
struct DesignRequest {
  std::string name;             // label in reports; defaults to method
  std::string method = "cr";    // cr | single | psod | msod-exact | icmsod | rerand
  KernelSpec kernel;            // psod, msod-exact, icmsod
  double alpha = 0.05;          // icmsod
  std::optional<int> t_count;   // icmsod; default ceil(1/alpha)
  std::optional<std::vector<int>> w0;  // single
  RerandSpec rerand;            // rerand (exact enumeration)
};

Design build_design(const DesignRequest& request, const CovariateMatrix& x);

struct CovariateSource {
  enum class Kind { example1, gaussian, csv } kind = Kind::gaussian;
  int b = 3;                    // example1
  int n = 0, d = 1;             // gaussian
  std::uint64_t seed = 0;       // gaussian
  std::string path;             // csv
};

// Conditional mean f(X_i); mu_i = 2 f(X_i).
struct CefSpec {
  enum class Kind { linear, mu, table } kind = Kind::linear;
  Eigen::VectorXd beta;    // linear: f = X beta
  Eigen::VectorXd values;  // mu: the vector mu; table: f itself
};

struct SimConfig {
  CovariateSource covariates;
  CefSpec cef;
  double tau = 0.0;
  double noise_sd = 0.0;
  std::int64_t replications = 1000;
  std::vector<DesignRequest> designs;
  TestStatisticKind statistic = TestStatisticKind::abs_mean_diff;
  double test_alpha = 0.05;
  // 0: exact p-values (explicit designs); > 0: Monte Carlo draws per test;
  // < 0: skip testing.
  std::int64_t test_draws = 0;
  KernelSpec risk_kernel;  // for the reported minimax risk
  double budget = 1.0;
  std::uint64_t seed = 0;
};

struct SimRow {
  std::string design;
  std::int64_t replications = 0;
  double mean_estimate = 0.0;
  double mse = 0.0;  // E(tau_hat - tau)^2 against the effect parameter tau
  double mse_se = 0.0;
  double bias = 0.0;
  double bias_se = 0.0;
  MseDecomposition predicted;
  double rejection_rate = 0.0;  // NaN when testing is skipped
  double minimax_risk = 0.0;
};

struct SimReport {
  std::vector<SimRow> rows;
};

CovariateMatrix load_covariates(const CovariateSource& source);
Eigen::VectorXd conditional_mean(const CefSpec& cef, const CovariateMatrix& x);  // f(X)

// Outcomes Y_i(w) = f(X_i) + w tau / 2 + eta_{i,w}, eta iid N(0, s^2).
// Replication r draws its outcomes from substream (seed, r) and each design's
// assignment from a stream keyed by the design index, so rows are
// reproducible regardless of thread count.
SimReport run_simulation(const SimConfig& config);

}  // namespace msod
