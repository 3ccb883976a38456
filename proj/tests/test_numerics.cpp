#include <doctest.h>

#include <cmath>
#include <random>

#include "msod/errors.hpp"
#include "msod/numerics.hpp"
#include "oracles.hpp"

using namespace msod;

TEST_SUITE("numerics") {

TEST_CASE("SymMatrix symmetrizes and rejects asymmetry") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2 + 1e-14, 2, 3;
  SymMatrix s(m);
  CHECK(s(0, 1) == s(1, 0));
  m(0, 1) = 2.5;
  CHECK_THROWS_AS(SymMatrix{m}, ValidationError);
  CHECK_THROWS_AS(SymMatrix{Eigen::MatrixXd(2, 3)}, ValidationError);
}

TEST_CASE("top_eigenpair examples") {
  auto d = top_eigenpair(SymMatrix::diagonal(Eigen::Vector3d(1, 2, 3)));
  CHECK(d.value == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(d.vector[2]) == doctest::Approx(1.0));
  CHECK(d.vector[2] > 0);

  Eigen::Vector4d w0(1, -1, 1, -1);
  auto r = top_eigenpair(SymMatrix::outer(w0));
  CHECK(r.value == doctest::Approx(4.0).epsilon(1e-12));
  CHECK((r.vector - w0 / 2).norm() < 1e-10);

  Eigen::MatrixXd acr = (4.0 / 3.0) * (Eigen::MatrixXd::Identity(4, 4) - Eigen::MatrixXd::Constant(4, 4, 0.25));
  auto c = top_eigenpair(SymMatrix(acr));
  CHECK(c.value == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(c.vector.sum()) < 1e-10);
  CHECK(c.vector.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("top_eigenpair matches Jacobi on random symmetric matrices") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 20;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    a = (a + a.transpose()).eval();
    auto pair = top_eigenpair(SymMatrix(a));
    CHECK(std::abs(pair.value - oracle::jacobi_max(a)) < 1e-8);
    CHECK(std::abs(pair.vector.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("psd_sqrt") {
  auto i3 = psd_sqrt(SymMatrix::identity(3));
  CHECK((i3.dense() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);

  auto d = psd_sqrt(SymMatrix::diagonal(Eigen::Vector2d(4, 9)));
  CHECK(d(0, 0) == doctest::Approx(2.0));
  CHECK(d(1, 1) == doctest::Approx(3.0));
  CHECK(std::abs(d(0, 1)) < 1e-12);

  Eigen::Vector4d w0(1, -1, -1, 1);
  auto r = psd_sqrt(SymMatrix::outer(w0));
  CHECK((r.dense() - w0 * w0.transpose() / 2).norm() < 1e-10);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 9;
    Eigen::MatrixXd m = oracle::random_psd(n, 1 + trial % n, rng);
    auto s = psd_sqrt(SymMatrix(m));
    CHECK((s.dense() * s.dense() - m).norm() <= 1e-8 * m.norm());
  }

  CHECK_THROWS_AS(psd_sqrt(SymMatrix::diagonal(Eigen::Vector2d(1, -1))), ValidationError);
}

TEST_CASE("psd_factor reconstructs") {
  std::mt19937_64 rng(8);
  Eigen::MatrixXd m = oracle::random_psd(7, 3, rng);
  Eigen::MatrixXd f = psd_factor(SymMatrix(m));
  CHECK(f.rows() == 3);
  CHECK((f.transpose() * f - m).norm() < 1e-9 * m.norm());
  CHECK(psd_factor(SymMatrix(Eigen::MatrixXd::Zero(3, 3))).rows() == 0);
}

TEST_CASE("project_capped_simplex examples") {
  auto a = project_capped_simplex(Eigen::Vector2d(0.4, 0.6), 1.0);
  CHECK(a[0] == doctest::Approx(0.4));
  CHECK(a[1] == doctest::Approx(0.6));
  auto b = project_capped_simplex(Eigen::Vector2d(1.0, 0.0), 0.6);
  CHECK(b[0] == doctest::Approx(0.6));
  CHECK(b[1] == doctest::Approx(0.4));
  auto c = project_capped_simplex(Eigen::Vector3d::Constant(1.0 / 3), 1.0 / 3);
  for (int i = 0; i < 3; ++i) CHECK(c[i] == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(project_capped_simplex(Eigen::Vector2d(1, 0), 0.4), InfeasibleError);
}

TEST_CASE("project_capped_simplex variational property") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  for (int trial = 0; trial < 30; ++trial) {
    const int t = 2 + trial % 8;
    const double cap = (1.0 + unif(rng) * (t - 1)) / t;
    Eigen::VectorXd v(t);
    for (int i = 0; i < t; ++i) v[i] = 2.0 * normal(rng);
    Eigen::VectorXd w = project_capped_simplex(v, cap);
    CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
    CHECK(w.minCoeff() >= -1e-12);
    CHECK(w.maxCoeff() <= cap + 1e-12);
    CHECK((w - oracle::capped_projection(v, cap)).norm() < 1e-9);
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd raw(t);
      for (int i = 0; i < t; ++i) raw[i] = unif(rng);
      Eigen::VectorXd u = oracle::capped_projection(raw * 3.0, cap);
      CHECK((v - w).dot(u - w) <= 1e-9);
    }
  }
}

TEST_CASE("chi2 quantiles") {
  CHECK(std::abs(chi2_inv_cdf(2, 0.1) - 0.210721) < 1e-6);
  CHECK(std::abs(chi2_inv_cdf(2, 0.1) + 2 * std::log(0.9)) < 1e-12);
  CHECK(std::abs(chi2_inv_cdf(2, 0.5) - 1.386294) < 1e-6);
  CHECK(std::abs(chi2_inv_cdf(1, 0.5) - 0.454936) < 1e-6);
  CHECK_THROWS(chi2_inv_cdf(2, 0.0));
  CHECK_THROWS(chi2_inv_cdf(2, 1.0));
}

TEST_CASE("chi2 inverse round-trips through a quadrature CDF") {
  for (int d : {1, 2, 3, 5, 10}) {
    for (double p : {0.01, 0.1, 0.3, 0.5, 0.8, 0.95}) {
      const double x = chi2_inv_cdf(d, p);
      CHECK(std::abs(oracle::chi2_cdf(d, x) - p) < 1e-7);
      CHECK(std::abs(chi2_cdf(d, x) - p) < 1e-10);
    }
  }
}

}
