#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "msod/errors.hpp"
#include "msod/inference.hpp"
#include "msod/optimizer.hpp"

using namespace msod;

namespace {

const Assignment kAlt(std::vector<int>{1, -1, 1, -1});

Eigen::VectorXd y3131() { return Eigen::Vector4d(3, 1, 3, 1); }

// Reference p-value by direct enumeration of the signed support.
double reference_p(const Design& d, const Assignment& w_obs, const Eigen::VectorXd& y, TestStatisticKind kind) {
  const double s_obs = statistic(kind, w_obs, y);
  double p = 0;
  for (const auto& pair : d.pairs()) {
    for (const Assignment& w : {pair.representative, pair.representative.negated()})
      if (statistic(kind, w, y) >= s_obs) p += pair.probability / 2;
  }
  return p;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("statistic examples") {
  CHECK(statistic(TestStatisticKind::abs_mean_diff, kAlt, y3131()) == 2.0);
  CHECK(statistic(TestStatisticKind::abs_mean_diff, Assignment(std::vector<int>{1, 1, -1, -1}), y3131()) == 0.0);
  for (auto kind : {TestStatisticKind::abs_mean_diff, TestStatisticKind::abs_t_pooled, TestStatisticKind::abs_t_welch})
    CHECK(statistic(kind, kAlt, Eigen::Vector4d::Constant(5.0)) == 0.0);
  // Zero within-group spread with a real difference is extreme.
  CHECK(std::isinf(statistic(TestStatisticKind::abs_t_pooled, kAlt, y3131())));
}

TEST_CASE("t statistics against hand formulas") {
  Eigen::VectorXd y(6);
  y << 1.0, 4.0, 2.5, 0.5, 3.0, -1.0;
  Assignment w(std::vector<int>{1, -1, 1, 1, -1, -1});
  // treated 1, 2.5, 0.5 -> mean 4/3; control 4, 3, -1 -> mean 2
  const double mt = 4.0 / 3, mc = 2.0;
  const double vt = (std::pow(1 - mt, 2) + std::pow(2.5 - mt, 2) + std::pow(0.5 - mt, 2)) / 2;
  const double vc = (std::pow(4 - mc, 2) + std::pow(3 - mc, 2) + std::pow(-1 - mc, 2)) / 2;
  const double welch = std::abs(mt - mc) / std::sqrt(vt / 3 + vc / 3);
  const double pooled = std::abs(mt - mc) / std::sqrt((vt + vc) / 2 * (2.0 / 3));
  CHECK(statistic(TestStatisticKind::abs_t_welch, w, y) == doctest::Approx(welch).epsilon(1e-12));
  CHECK(statistic(TestStatisticKind::abs_t_pooled, w, y) == doctest::Approx(pooled).epsilon(1e-12));
}

TEST_CASE("statistic is bitwise sign symmetric") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd y(8);
    for (int i = 0; i < 8; ++i) y[i] = normal(rng) * 1e3;
    Rng r(trial);
    auto w = design_cr(8).sample(r);
    for (auto kind : {TestStatisticKind::abs_mean_diff, TestStatisticKind::abs_t_pooled, TestStatisticKind::abs_t_welch})
      CHECK(statistic(kind, w, y) == statistic(kind, w.negated(), y));
  }
}

TEST_CASE("exact p-value examples") {
  Eigen::VectorXd y(4);
  y << 0.3, -1.2, 5.0, 2.2;
  auto single = design_single(kAlt);
  CHECK(p_value_exact(single, kAlt, y, TestStatisticKind::abs_mean_diff).p_value == 1.0);
  CHECK(p_value_exact(single, kAlt.negated(), y, TestStatisticKind::abs_t_welch).p_value == 1.0);

  auto cr = design_cr(4);
  auto r = p_value_exact(cr, kAlt, y3131(), TestStatisticKind::abs_mean_diff);
  CHECK(r.p_value == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(r.observed_stat == 2.0);
  CHECK(r.method == PValueMethod::exact);

  // Distinct outcomes where only the observed pair is extreme.
  Eigen::VectorXd z(4);
  z << 10.0, 0.1, 9.0, 0.2;
  CHECK(p_value_exact(cr, kAlt, z, TestStatisticKind::abs_mean_diff).p_value == doctest::Approx(1.0 / 3));

  CHECK_THROWS_AS(p_value_exact(single, Assignment(std::vector<int>{1, 1, -1, -1}), y, TestStatisticKind::abs_mean_diff),
                  ValidationError);
}

TEST_CASE("exact p-value matches enumeration and is sign invariant") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(8, 2);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 2; ++j) x(i, j) = normal(rng);
  auto gram = build_gram(CovariateMatrix(x), KernelSpec{});
  auto d = icmsod(gram, 0.1, 15);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd y(8);
    for (int i = 0; i < 8; ++i) y[i] = normal(rng);
    const Assignment& w = d.pairs()[static_cast<std::size_t>(trial) % d.pairs().size()].representative;
    for (auto kind : {TestStatisticKind::abs_mean_diff, TestStatisticKind::abs_t_welch}) {
      const double p = p_value_exact(d, w, y, kind).p_value;
      CHECK(p > 0.0);
      CHECK(p <= 1.0);
      CHECK(std::abs(p - reference_p(d, w, y, kind)) < 1e-12);
      CHECK(p == p_value_exact(d, w.negated(), y, kind).p_value);
    }
  }
}

TEST_CASE("achievability at the cap") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(8, 1);
  for (int i = 0; i < 8; ++i) x(i, 0) = normal(rng);
  auto gram = build_gram(CovariateMatrix(x), KernelSpec{});
  const double alpha = 0.1;
  auto d = icmsod(gram, alpha, 10);
  // y aligned with a support pair: that pair alone attains the largest statistic
  const Assignment& w = d.pairs().front().representative;
  Eigen::VectorXd y = w.vector() * 10.0;
  for (int i = 0; i < 8; ++i) y[i] += 1e-3 * i;
  CHECK(p_value_exact(d, w, y, TestStatisticKind::abs_mean_diff).p_value <= alpha);
}

TEST_CASE("Monte Carlo p-values") {
  auto single = design_single(kAlt);
  CHECK(p_value_mc(single, kAlt, y3131(), TestStatisticKind::abs_mean_diff, 500, 1).p_value == 1.0);

  auto cr = design_cr(4);
  auto r = p_value_mc(cr, kAlt, y3131(), TestStatisticKind::abs_mean_diff, 10000, 9);
  CHECK(std::abs(r.p_value - 1.0 / 3) <= 0.02);
  CHECK(r.method == PValueMethod::monte_carlo);
  CHECK(r.draws == 10000);
  CHECK(r.p_value == p_value_mc(cr, kAlt, y3131(), TestStatisticKind::abs_mean_diff, 10000, 9).p_value);

  auto flat = p_value_mc(cr, kAlt, Eigen::Vector4d::Constant(1.0), TestStatisticKind::abs_t_pooled, 100, 2);
  CHECK(flat.p_value == 1.0);

  CHECK_THROWS_AS(p_value_mc(cr, kAlt, y3131(), TestStatisticKind::abs_mean_diff, 0, 1), ValidationError);
}

TEST_CASE("Monte Carlo agrees with exact") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal;
  auto cr = design_cr(10);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd y(10);
    for (int i = 0; i < 10; ++i) y[i] = normal(rng);
    Rng r(trial);
    auto w = cr.sample(r);
    const double pe = p_value_exact(cr, w, y, TestStatisticKind::abs_mean_diff).p_value;
    const std::int64_t m = 4000;
    const double pm = p_value_mc(cr, w, y, TestStatisticKind::abs_mean_diff, m, 100 + trial).p_value;
    CHECK(std::abs(pm - pe) <= 3 * std::sqrt(pe * (1 - pe) / m) + 2.0 / m);
  }
}

TEST_CASE("statistic names round trip") {
  for (auto kind : {TestStatisticKind::abs_mean_diff, TestStatisticKind::abs_t_pooled, TestStatisticKind::abs_t_welch})
    CHECK(statistic_kind_from_string(to_string(kind)) == kind);
  CHECK_THROWS_AS(statistic_kind_from_string("median"), ValidationError);
}

}
