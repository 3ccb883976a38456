#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "msod/designs.hpp"
#include "msod/errors.hpp"
#include "oracles.hpp"

using namespace msod;

namespace {

// Full signed support: each pair's mass split between w and -w.
double signed_b(const Design& d, const Eigen::VectorXd& mu) {
  double total = 0.0;
  for (const auto& p : d.pairs()) {
    const Eigen::VectorXd w = p.representative.vector();
    total += 0.5 * p.probability * std::pow(w.dot(mu), 2);
    total += 0.5 * p.probability * std::pow((-w).dot(mu), 2);
  }
  return total;
}

Design random_design(int n, std::mt19937_64& rng) {
  auto reps = enumerate_representatives(n);
  std::uniform_real_distribution<double> unif;
  std::vector<std::pair<Assignment, double>> support;
  for (const auto& w : reps)
    if (unif(rng) < 0.4) support.emplace_back(w, unif(rng));
  if (support.empty()) support.emplace_back(reps.front(), 1.0);
  return design_from_support(support);
}

}  // namespace

TEST_SUITE("designs") {

TEST_CASE("assignment validation") {
  CHECK_THROWS_AS(Assignment(std::vector<int>{1, 1}), ValidationError);
  CHECK_THROWS_AS(Assignment(std::vector<int>{1, 0}), ValidationError);
  CHECK_THROWS_AS(Assignment(std::vector<int>{1, -1, 1}), ValidationError);
  CHECK_THROWS_AS(Assignment(std::vector<int>{}), ValidationError);
  Assignment w(std::vector<int>{-1, 1, -1, 1});
  CHECK(w.canonical().to_ints() == std::vector<int>{1, -1, 1, -1});
  CHECK(w.negated().is_canonical());
  CHECK(w.dot(w.negated()) == -4);
}

TEST_CASE("enumerate_balanced counts and order") {
  auto two = enumerate_balanced(2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].to_ints() == std::vector<int>{1, -1});
  CHECK(two[1].to_ints() == std::vector<int>{-1, 1});
  CHECK(enumerate_balanced(4).size() == 6);
  CHECK(enumerate_balanced(6).size() == 20);
  for (int n : {4, 6, 8, 10}) {
    auto lib = enumerate_balanced(n);
    auto ref = oracle::balanced_vectors(n);
    REQUIRE(lib.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(lib[i].to_ints() == ref[i]);
    for (std::size_t i = 1; i < lib.size(); ++i) CHECK(lex_less(lib[i - 1], lib[i]));
    CHECK(enumerate_representatives(n).size() == binomial(n, n / 2) / 2);
  }
  CHECK_THROWS_AS(enumerate_balanced(5), ValidationError);
  CHECK_THROWS_AS(enumerate_balanced(30), ValidationError);
}

TEST_CASE("design_cr") {
  auto d = design_cr(4);
  REQUIRE(d.pairs().size() == 3);
  for (const auto& p : d.pairs()) {
    CHECK(p.probability == doctest::Approx(1.0 / 3));
    CHECK(p.representative.is_canonical());
  }
  auto q = q_matrix(d);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(q(i, j) == doctest::Approx(i == j ? 1.0 : -1.0 / 3).epsilon(1e-12));
  CHECK(!Design::implicit_complete_randomization(30).is_explicit());
  auto qi = q_matrix(Design::implicit_complete_randomization(30));
  CHECK(qi(0, 0) == 1.0);
  CHECK(qi(0, 1) == doctest::Approx(-1.0 / 29));
  CHECK_THROWS_AS(Design::implicit_complete_randomization(30).pairs(), ValidationError);
}

TEST_CASE("design_cr sampling frequencies") {
  auto d = design_cr(4);
  std::map<std::vector<int>, int> counts;
  Rng rng(123);
  const int draws = 60000;
  for (int k = 0; k < draws; ++k) counts[d.sample(rng).canonical().to_ints()]++;
  REQUIRE(counts.size() == 3);
  for (auto& [w, c] : counts) CHECK(std::abs(c / double(draws) - 1.0 / 3) < 0.01);
}

TEST_CASE("implicit design sampling is balanced") {
  auto d = Design::implicit_complete_randomization(40);
  Rng rng(1);
  for (int k = 0; k < 50; ++k) CHECK(d.sample(rng).n() == 40);
}

TEST_CASE("design_single") {
  Assignment w0(std::vector<int>{-1, 1, -1, 1});
  auto d = design_single(w0);
  REQUIRE(d.pairs().size() == 1);
  CHECK(d.pairs()[0].representative.to_ints() == std::vector<int>{1, -1, 1, -1});
  CHECK(d.pairs()[0].probability == 1.0);
  Eigen::VectorXd v = w0.vector();
  CHECK((q_matrix(d).dense() - v * v.transpose()).norm() == 0.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto w = sample_assignment(d, seed);
    CHECK((w == w0 || w == w0.negated()));
  }
}

TEST_CASE("design_from_support") {
  Assignment a(std::vector<int>{-1, 1, -1, 1});
  auto merged = design_from_support({{a, 0.5}, {a.negated(), 0.5}});
  REQUIRE(merged.pairs().size() == 1);
  CHECK(merged.pairs()[0].probability == doctest::Approx(1.0));

  Assignment b(std::vector<int>{1, 1, -1, -1});
  auto two = design_from_support({{a, 0.3}, {b, 0.3}});
  REQUIRE(two.pairs().size() == 2);
  CHECK(two.pairs()[0].probability == doctest::Approx(0.5));
  CHECK(two.pairs()[1].probability == doctest::Approx(0.5));

  Eigen::VectorXd va = a.vector(), vb = b.vector();
  Eigen::MatrixXd ref = (va * va.transpose() + vb * vb.transpose()) / 2;
  CHECK((q_matrix(two).dense() - ref).norm() < 1e-12);

  auto dropped = design_from_support({{a, 1.0}, {b, 0.0}});
  CHECK(dropped.pairs().size() == 1);
}

TEST_CASE("from_pairs is strict") {
  Assignment a(std::vector<int>{1, -1, 1, -1});
  Assignment b(std::vector<int>{1, 1, -1, -1});
  CHECK_THROWS_AS(Design::from_pairs(4, {{a.negated(), 1.0}}), ValidationError);
  CHECK_THROWS_AS(Design::from_pairs(4, {{a, 0.5}, {a, 0.5}}), ValidationError);
  CHECK_THROWS_AS(Design::from_pairs(4, {{a, 0.5}, {b, 0.4}}), ValidationError);
  CHECK_THROWS_AS(Design::from_pairs(4, {{a, 0.0}, {b, 1.0}}), ValidationError);
  CHECK_NOTHROW(Design::from_pairs(4, {{a, 0.5}, {b, 0.5}}));
}

TEST_CASE("sample frequencies follow pair probabilities") {
  std::mt19937_64 gen(77);
  auto d = random_design(6, gen);
  const int draws = 100000;
  std::vector<int> counts(d.pairs().size(), 0);
  Rng rng(5);
  for (int k = 0; k < draws; ++k) counts[*d.find_pair(d.sample(rng))]++;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double p = d.pairs()[i].probability;
    CHECK(std::abs(counts[i] / double(draws) - p) <= 3 * std::sqrt(p * (1 - p) / draws) + 1e-12);
  }
}

TEST_CASE("q_matrix invariants on random designs") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + 2 * (trial % 3);
    auto d = random_design(n, rng);
    auto q = q_matrix(d);
    for (int i = 0; i < n; ++i) CHECK(q(i, i) == 1.0);
    CHECK((q.dense() * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(oracle::jacobi_eigenvalues(q.dense())[0] >= -1e-9);
    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu[i] = normal(rng);
    CHECK(std::abs(mu.dot(q.dense() * mu) - signed_b(d, mu)) < 1e-9);
    for (const auto& p : d.pairs()) {
      CHECK(p.representative.is_canonical());
      int s = 0;
      for (int i = 0; i < n; ++i) s += p.representative[i];
      CHECK(s == 0);
    }
  }
}

TEST_CASE("compensated_sum") {
  std::vector<double> v{1.0, 1e100, 1.0, -1e100};
  CHECK(compensated_sum(v) == 2.0);
}

}
