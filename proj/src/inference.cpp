#include "msod/inference.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "msod/errors.hpp"
#include "msod/parallel.hpp"

namespace msod {

namespace {

struct GroupMoments {
  double mean = 0.0;
  double ss = 0.0;  // sum of squared deviations
};

GroupMoments moments(const std::vector<std::int8_t>& w, const Eigen::VectorXd& y, int sign) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == sign) {
      sum += y[static_cast<Eigen::Index>(i)];
      ++count;
    }
  }
  GroupMoments g;
  g.mean = sum / count;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == sign) {
      const double dev = y[static_cast<Eigen::Index>(i)] - g.mean;
      g.ss += dev * dev;
    }
  }
  return g;
}

double signed_statistic(TestStatisticKind kind, const std::vector<std::int8_t>& w,
                        const Eigen::VectorXd& y) {
  const GroupMoments treated = moments(w, y, 1);
  const GroupMoments control = moments(w, y, -1);
  const double diff = std::abs(treated.mean - control.mean);
  if (kind == TestStatisticKind::abs_mean_diff) return diff;

  const double m = static_cast<double>(w.size()) / 2.0;
  double se = 0.0;
  if (kind == TestStatisticKind::abs_t_pooled) {
    const double pooled = (treated.ss + control.ss) / (2.0 * m - 2.0);
    se = std::sqrt(pooled * (2.0 / m));
  } else {
    se = std::sqrt(treated.ss / (m - 1.0) / m + control.ss / (m - 1.0) / m);
  }
  if (se == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / se;
}

void check_inputs(TestStatisticKind kind, int n, const Eigen::VectorXd& y) {
  if (y.size() != n) {
    throw ValidationError("outcome vector has length " + std::to_string(y.size()) +
                          " but n = " + std::to_string(n));
  }
  if (!y.allFinite()) throw ValidationError("outcomes must be finite");
  if (kind != TestStatisticKind::abs_mean_diff && n < 4) {
    throw ValidationError("t statistics need at least two units per arm");
  }
}

}  // namespace

std::string to_string(TestStatisticKind kind) {
  switch (kind) {
    case TestStatisticKind::abs_mean_diff: return "abs_mean_diff";
    case TestStatisticKind::abs_t_pooled: return "abs_t_pooled";
    case TestStatisticKind::abs_t_welch: return "abs_t_welch";
  }
  return "abs_mean_diff";
}

TestStatisticKind statistic_kind_from_string(const std::string& name) {
  if (name == "abs_mean_diff") return TestStatisticKind::abs_mean_diff;
  if (name == "abs_t_pooled") return TestStatisticKind::abs_t_pooled;
  if (name == "abs_t_welch") return TestStatisticKind::abs_t_welch;
  throw ValidationError("unknown test statistic '" + name +
                        "' (expected abs_mean_diff, abs_t_pooled or abs_t_welch)");
}

std::string to_string(PValueMethod method) {
  return method == PValueMethod::exact ? "exact" : "monte_carlo";
}

double statistic(TestStatisticKind kind, const Assignment& w, const Eigen::VectorXd& y_obs) {
  check_inputs(kind, w.n(), y_obs);
  return signed_statistic(kind, w.values(), y_obs);
}

TestResult p_value_exact(const Design& design, const Assignment& w_obs,
                         const Eigen::VectorXd& y_obs, TestStatisticKind kind) {
  if (w_obs.n() != design.n()) throw ValidationError("assignment length does not match design");
  check_inputs(kind, design.n(), y_obs);
  if (!design.is_explicit()) {
    throw ValidationError("exact p-values need an enumerated design; use Monte Carlo draws");
  }
  if (!design.find_pair(w_obs)) {
    throw ValidationError("observed assignment is not in the design's support");
  }
  TestResult result;
  result.kind = kind;
  result.method = PValueMethod::exact;
  result.observed_stat = signed_statistic(kind, w_obs.values(), y_obs);
  std::vector<double> masses;
  for (const SignPair& pair : design.pairs()) {
    // Both signs carry p/2 and give the same statistic.
    const std::vector<std::int8_t>& w = pair.representative.values();
    if (signed_statistic(kind, w, y_obs) >= result.observed_stat) masses.push_back(pair.probability);
  }
  result.p_value = std::min(1.0, compensated_sum(masses));
  return result;
}

TestResult p_value_mc(const Design& design, const Assignment& w_obs, const Eigen::VectorXd& y_obs,
                      TestStatisticKind kind, std::int64_t m_draws, std::uint64_t seed) {
  if (w_obs.n() != design.n()) throw ValidationError("assignment length does not match design");
  check_inputs(kind, design.n(), y_obs);
  if (m_draws < 1) throw ValidationError("Monte Carlo p-values need at least one draw");
  TestResult result;
  result.kind = kind;
  result.method = PValueMethod::monte_carlo;
  result.draws = m_draws;
  result.observed_stat = signed_statistic(kind, w_obs.values(), y_obs);

  constexpr std::size_t kBlock = 4096;
  const auto count = static_cast<std::size_t>(m_draws);
  std::vector<std::int64_t> hits((count + kBlock - 1) / kBlock, 0);
  parallel_blocks(count, kBlock, [&](std::size_t block, std::size_t begin, std::size_t end) {
    std::int64_t local = 0;
    for (std::size_t k = begin; k < end; ++k) {
      Rng rng = substream(seed, k);
      const Assignment w = design.sample(rng);
      if (signed_statistic(kind, w.values(), y_obs) >= result.observed_stat) ++local;
    }
    hits[block] = local;
  });
  std::int64_t total = 0;
  for (std::int64_t h : hits) total += h;
  result.p_value = static_cast<double>(1 + total) / static_cast<double>(1 + m_draws);
  return result;
}

}  // namespace msod
