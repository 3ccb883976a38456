#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "msod/designs.hpp"

namespace msod {

enum class TestStatisticKind { abs_mean_diff, abs_t_pooled, abs_t_welch };

std::string to_string(TestStatisticKind kind);
TestStatisticKind statistic_kind_from_string(const std::string& name);

enum class PValueMethod { exact, monte_carlo };

std::string to_string(PValueMethod method);

struct TestResult {
  double p_value = 1.0;
  double observed_stat = 0.0;
  PValueMethod method = PValueMethod::exact;
  std::int64_t draws = 0;  // Monte Carlo only
  TestStatisticKind kind = TestStatisticKind::abs_mean_diff;
};

// Two-sided statistics; group sums are formed separately so that
// s(W, Y) == s(-W, Y) holds bit for bit.
double statistic(TestStatisticKind kind, const Assignment& w, const Eigen::VectorXd& y_obs);

// Exact randomization p-value over the signed support of an explicit design.
// w_obs must lie in the support.
TestResult p_value_exact(const Design& design, const Assignment& w_obs,
                         const Eigen::VectorXd& y_obs, TestStatisticKind kind);

// (1 + #{draws with s >= s_obs}) / (1 + m_draws); draw k uses substream k.
TestResult p_value_mc(const Design& design, const Assignment& w_obs, const Eigen::VectorXd& y_obs,
                      TestStatisticKind kind, std::int64_t m_draws, std::uint64_t seed);

}  // namespace msod
