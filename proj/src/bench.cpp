#include "msod/bench.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "msod/errors.hpp"
#include "msod/io.hpp"
#include "msod/optimizer.hpp"
#include "msod/parallel.hpp"

namespace msod {

CovariateMatrix example1_covariates(int b) {
  if (b < 2 || b > 10) throw ValidationError("Example 1 needs 2 <= b <= 10");
  const long n = 1L << b;
  Eigen::MatrixXd x(n, 1);
  for (long i = 1; i <= n; ++i) {
    double total = 0.0;
    // t runs while t <= b - 2 and t <= b - log2(i), i.e. i * 2^t <= 2^b.
    for (int t = 0; t <= b - 2 && (i << t) <= n; ++t) {
      const long block = 1L << (b - t - 1);
      const long up = (i + block - 1) / block;  // ceil(i / block)
      const double sign = up % 2 == 0 ? 1.0 : -1.0;
      const int exponent = -(1 << (b - 1)) + static_cast<int>(block) + static_cast<int>((i - 1) % block);
      total += sign * std::ldexp(1.0, exponent);
    }
    x(i - 1, 0) = total;
  }
  return CovariateMatrix(std::move(x));
}

Assignment example1_partition(int b) {
  if (b < 2 || b > 10) throw ValidationError("Example 1 needs 2 <= b <= 10");
  std::vector<int> w(static_cast<std::size_t>(1) << b);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = i % 2 == 0 ? -1 : 1;
  return Assignment(w);
}

Design build_design(const DesignRequest& request, const CovariateMatrix& x) {
  const std::string& method = request.method;
  if (method == "cr") return design_cr(x.n());
  if (method == "single") {
    if (!request.w0) throw ValidationError("method 'single' needs an assignment w0");
    const Assignment w0(*request.w0);
    if (w0.n() != x.n()) throw ValidationError("w0 length does not match the covariates");
    return design_single(w0);
  }
  if (method == "rerand") return exact_rerandomization_design(x, request.rerand);
  const GramMatrix gram = build_gram(x, request.kernel);
  if (method == "psod") return design_single(best_assignment(gram));
  if (method == "msod-exact") return msod_exact(gram);
  if (method == "icmsod") {
    if (!(request.alpha > 0.0 && request.alpha <= 1.0)) {
      throw ValidationError("alpha must lie in (0, 1]");
    }
    const int t = request.t_count ? *request.t_count
                                  : static_cast<int>(std::ceil(1.0 / request.alpha - 1e-12));
    return icmsod(gram, request.alpha, t);
  }
  throw ValidationError("unknown design method '" + method +
                        "' (expected cr, single, psod, msod-exact, icmsod or rerand)");
}

CovariateMatrix load_covariates(const CovariateSource& source) {
  switch (source.kind) {
    case CovariateSource::Kind::example1:
      return example1_covariates(source.b);
    case CovariateSource::Kind::csv:
      return read_covariates_csv(source.path);
    case CovariateSource::Kind::gaussian: {
      if (source.n < 2 || source.n % 2 != 0) throw ValidationError("n must be even and positive");
      if (source.d < 1) throw ValidationError("d must be positive");
      Rng rng(source.seed);
      std::normal_distribution<double> normal;
      Eigen::MatrixXd x(source.n, source.d);
      for (int i = 0; i < source.n; ++i) {
        for (int j = 0; j < source.d; ++j) x(i, j) = normal(rng);
      }
      return CovariateMatrix(std::move(x));
    }
  }
  throw ValidationError("unknown covariate source");
}

Eigen::VectorXd conditional_mean(const CefSpec& cef, const CovariateMatrix& x) {
  switch (cef.kind) {
    case CefSpec::Kind::linear:
      if (cef.beta.size() != x.d()) throw ValidationError("beta length does not match d");
      return x.values() * cef.beta;
    case CefSpec::Kind::mu:
      if (cef.values.size() != x.n()) throw ValidationError("mu length does not match n");
      return cef.values / 2.0;
    case CefSpec::Kind::table:
      if (cef.values.size() != x.n()) throw ValidationError("f table length does not match n");
      return cef.values;
  }
  throw ValidationError("unknown conditional mean specification");
}

namespace {

struct Accumulator {
  double sum_err = 0.0;
  double sum_err2 = 0.0;
  double sum_err4 = 0.0;
  double sum_est = 0.0;
  std::int64_t rejections = 0;

  void merge(const Accumulator& o) {
    sum_err += o.sum_err;
    sum_err2 += o.sum_err2;
    sum_err4 += o.sum_err4;
    sum_est += o.sum_est;
    rejections += o.rejections;
  }
};

constexpr std::uint64_t kDesignStreamOffset = 0x9e3779b97f4a7c15ULL;

}  // namespace

SimReport run_simulation(const SimConfig& config) {
  if (config.replications < 1) throw ValidationError("replications must be at least 1");
  if (!(config.noise_sd >= 0.0)) throw ValidationError("noise_sd must be nonnegative");
  if (config.designs.empty()) throw ValidationError("simulation needs at least one design");
  if (!(config.test_alpha > 0.0 && config.test_alpha < 1.0)) {
    throw ValidationError("test_alpha must lie in (0, 1)");
  }

  const CovariateMatrix x = load_covariates(config.covariates);
  const int n = x.n();
  const Eigen::VectorXd f = conditional_mean(config.cef, x);
  const GramMatrix risk_gram = build_gram(x, config.risk_kernel);

  std::vector<Design> designs;
  designs.reserve(config.designs.size());
  for (const DesignRequest& request : config.designs) designs.push_back(build_design(request, x));
  const bool testing = config.test_draws >= 0;
  if (testing && config.test_draws == 0) {
    for (std::size_t k = 0; k < designs.size(); ++k) {
      if (!designs[k].is_explicit()) {
        throw ValidationError("exact p-values need enumerated designs; set test_draws > 0");
      }
    }
  }

  const double s2 = config.noise_sd * config.noise_sd;
  const Eigen::VectorXd mu = 2.0 * f;
  const auto reps = static_cast<std::size_t>(config.replications);
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (reps + kBlock - 1) / kBlock;
  std::vector<std::vector<Accumulator>> partial(blocks, std::vector<Accumulator>(designs.size()));

  parallel_blocks(reps, kBlock, [&](std::size_t block, std::size_t begin, std::size_t end) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd y_treated(n), y_control(n), y_obs(n);
    for (std::size_t r = begin; r < end; ++r) {
      Rng outcome_rng = substream(config.seed, r);
      for (int i = 0; i < n; ++i) {
        const double eta_t = config.noise_sd * normal(outcome_rng);
        const double eta_c = config.noise_sd * normal(outcome_rng);
        y_treated[i] = f[i] + config.tau / 2.0 + eta_t;
        y_control[i] = f[i] - config.tau / 2.0 + eta_c;
      }
      for (std::size_t k = 0; k < designs.size(); ++k) {
        const std::uint64_t design_seed = substream_seed(config.seed ^ kDesignStreamOffset, k);
        Rng design_rng = substream(design_seed, r);
        const Assignment w = designs[k].sample(design_rng);
        double treated = 0.0;
        double control = 0.0;
        for (int i = 0; i < n; ++i) {
          if (w[i] > 0) {
            y_obs[i] = y_treated[i];
            treated += y_obs[i];
          } else {
            y_obs[i] = y_control[i];
            control += y_obs[i];
          }
        }
        const double estimate = (treated - control) * (2.0 / n);
        const double err = estimate - config.tau;
        Accumulator& acc = partial[block][k];
        acc.sum_est += estimate;
        acc.sum_err += err;
        acc.sum_err2 += err * err;
        acc.sum_err4 += err * err * err * err;
        if (testing) {
          const TestResult test =
              config.test_draws == 0
                  ? p_value_exact(designs[k], w, y_obs, config.statistic)
                  : p_value_mc(designs[k], w, y_obs, config.statistic, config.test_draws,
                               substream_seed(design_seed, r));
          if (test.p_value <= config.test_alpha) ++acc.rejections;
        }
      }
    }
  });

  SimReport report;
  const double count = static_cast<double>(reps);
  for (std::size_t k = 0; k < designs.size(); ++k) {
    Accumulator total;
    for (std::size_t b = 0; b < blocks; ++b) total.merge(partial[b][k]);
    SimRow row;
    row.design = config.designs[k].name.empty() ? config.designs[k].method : config.designs[k].name;
    row.replications = config.replications;
    row.mean_estimate = total.sum_est / count;
    row.mse = total.sum_err2 / count;
    row.bias = total.sum_err / count;
    if (reps > 1) {
      const double var_err = std::max(0.0, (total.sum_err2 - count * row.bias * row.bias) / (count - 1));
      const double var_sq = std::max(0.0, (total.sum_err4 - count * row.mse * row.mse) / (count - 1));
      row.bias_se = std::sqrt(var_err / count);
      row.mse_se = std::sqrt(var_sq / count);
    }
    // eps_i = eta_{i,1} + eta_{i,-1} has variance 2 s^2; the SATE
    // (1/n) sum (Y_i(1) - Y_i(-1)) has variance 2 s^2 / n.
    row.predicted = predict_mse(designs[k], mu, 2.0 * n * s2, 2.0 * s2 / n);
    row.rejection_rate = testing ? static_cast<double>(total.rejections) / count
                                 : std::numeric_limits<double>::quiet_NaN();
    row.minimax_risk = minimax_risk(designs[k], risk_gram, config.budget).minimax_risk;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace msod
