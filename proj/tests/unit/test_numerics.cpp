#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "postpi/numerics.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>

using namespace postpi;
using testing_support::max_abs_diff;

TEST_CASE("ols_fit on a constant column") {
  const RealMatrix X = RealMatrix::Ones(3, 1);
  const RealVector y = RealVector::Constant(3, 2.0);
  const OlsFit fit = ols_fit(X, y, 2);
  CHECK(fit.coefficients(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit.residuals.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(fit.residual_variance < 1e-28);
}

TEST_CASE("ols_fit reproduces an exact line") {
  RealMatrix X(3, 2);
  X << 1, 0, 1, 1, 1, 2;
  const RealVector y = (RealVector(3) << 1, 3, 5).finished();
  const OlsFit fit = ols_fit(X, y, 1);
  CHECK(fit.coefficients(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.coefficients(1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.residuals.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ols_fit matches explicit 2x2 normal equations on a noisy 8x2 design") {
  std::mt19937_64 gen(20240611);
  const RealMatrix X = testing_support::random_design(gen, 8, 1);
  const RealVector y = 0.7 * X.col(0) - 1.3 * X.col(1) +
                       0.25 * testing_support::random_vector(gen, 8);
  const OlsFit fit = ols_fit(X, y, 6);
  const auto expected = oracle::normal_equations(oracle::to_mat(X), oracle::to_vec(y));
  REQUIRE(expected.size() == 2);
  CHECK(std::abs(fit.coefficients(0) - expected[0]) < 1e-10);
  CHECK(std::abs(fit.coefficients(1) - expected[1]) < 1e-10);

  const RealMatrix gram_inv = (X.transpose() * X).inverse();
  CHECK(max_abs_diff(fit.gram_inverse, gram_inv) < 1e-10);
  CHECK(fit.residual_variance ==
        doctest::Approx(fit.residuals.squaredNorm() / 6.0).epsilon(1e-14));
}

TEST_CASE("ols_fit residuals are orthogonal to the design") {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 30 + trial, p = 1 + trial % 5;
    RealMatrix X = testing_support::random_design(gen, n, p);
    X.col(1) *= 1000.0;  // widen the dynamic range
    const RealVector y = testing_support::random_vector(gen, n) * 10.0;
    const OlsFit fit = ols_fit(X, y, std::size_t(n - p - 1));
    const double bound = 1e-8 * double(n) * X.cwiseAbs().maxCoeff();
    CHECK((X.transpose() * fit.residuals).cwiseAbs().maxCoeff() <= bound);
  }
}

TEST_CASE("ols_fit rejects bad input") {
  RealMatrix X(4, 3);
  X << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8;  // third column = 2 * second
  const RealVector y = RealVector::LinSpaced(4, 0.0, 3.0);
  try {
    ols_fit(X, y, 1);
    FAIL("expected RankDeficientError");
  } catch (const RankDeficientError& e) {
    CHECK(e.column() == 2);
  }
  CHECK_THROWS_AS(ols_fit(X.topRows(3), y.head(2), 1), DimensionError);
  CHECK_THROWS_AS(ols_fit(RealMatrix::Ones(2, 2), RealVector::Ones(2), 1), DimensionError);
  CHECK_THROWS_AS(ols_fit(X.leftCols(2), y, 0), std::invalid_argument);
  RealVector bad = y;
  bad(1) = std::nan("");
  CHECK_THROWS(ols_fit(X.leftCols(2), bad, 2));
}

TEST_CASE("cross_moment_mean examples") {
  const RealMatrix ones = RealMatrix::Ones(2, 1);
  const RealVector v = (RealVector(2) << 3, 5).finished();
  CHECK(cross_moment_mean(ones, v)(0) == doctest::Approx(4.0));

  std::mt19937_64 gen(10);
  const RealMatrix X = testing_support::random_matrix(gen, 10, 3);
  CHECK(cross_moment_mean(X, RealVector::Zero(10)).isZero(0.0));
  const RealVector w = testing_support::random_vector(gen, 10);
  const auto expected = oracle::cross_moment(oracle::to_mat(X), oracle::to_vec(w));
  CHECK(max_abs_diff(cross_moment_mean(X, w), oracle::from_vec(expected)) < 1e-12);
  CHECK_THROWS_AS(cross_moment_mean(X, RealVector::Zero(9)), DimensionError);
}

TEST_CASE("gram_mean examples") {
  const RealMatrix I = RealMatrix::Identity(2, 2);
  CHECK(max_abs_diff(gram_mean(I), 0.5 * I) == 0.0);

  RealMatrix row(1, 2);
  row << 3.0, -2.0;
  RealMatrix expected(2, 2);
  expected << 9, -6, -6, 4;
  CHECK(max_abs_diff(gram_mean(row), expected) == 0.0);

  std::mt19937_64 gen(20);
  const RealMatrix X = testing_support::random_matrix(gen, 20, 2);
  CHECK(max_abs_diff(gram_mean(X), oracle::from_mat(oracle::gram(oracle::to_mat(X)))) <
        1e-12);
}

TEST_CASE("outer_moment examples") {
  RealMatrix same(4, 3);
  same.rowwise() = RealVector::LinSpaced(3, 1.0, 3.0).transpose();
  CHECK(outer_moment(same, true).cwiseAbs().maxCoeff() < 1e-15);

  const RealVector v = (RealVector(3) << 1, -2, 0.5).finished();
  CHECK(max_abs_diff(outer_moment(v.transpose(), false), v * v.transpose()) == 0.0);

  std::mt19937_64 gen(15);
  const RealMatrix P = testing_support::random_matrix(gen, 15, 3);
  for (bool centered : {false, true}) {
    const auto expected = oracle::from_mat(oracle::outer(oracle::to_mat(P), centered));
    CHECK(max_abs_diff(outer_moment(P, centered), expected) < 1e-12);
  }

  CHECK_THROWS(outer_moment(RealMatrix(0, 2), false));
  CHECK_THROWS(outer_moment(RealMatrix::Ones(1, 2), true));
}

TEST_CASE("moment helpers agree with loop oracles on random instances") {
  std::mt19937_64 gen(4242);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index m = 5 + trial % 40, p = 1 + trial % 6;
    const RealMatrix X = testing_support::random_matrix(gen, m, p);
    const RealVector v = testing_support::random_vector(gen, m);
    const auto Xo = oracle::to_mat(X);
    CHECK(max_abs_diff(cross_moment_mean(X, v),
                       oracle::from_vec(oracle::cross_moment(Xo, oracle::to_vec(v)))) < 1e-12);
    CHECK(max_abs_diff(gram_mean(X), oracle::from_mat(oracle::gram(Xo))) < 1e-12);
    CHECK(max_abs_diff(scale_rows(X, v),
                       oracle::from_mat(oracle::scaled_rows(Xo, oracle::to_vec(v)))) == 0.0);
  }
}

TEST_CASE("outer_moment is symmetric and positive semidefinite") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index m = 2 + trial % 30, p = 1 + trial % 7;
    RealMatrix P = testing_support::random_matrix(gen, m, p);
    P.col(0) *= 1e3;
    for (bool centered : {false, true}) {
      const RealMatrix S = outer_moment(P, centered);
      CHECK(S == S.transpose());
      const double min_eig =
          Eigen::SelfAdjointEigenSolver<RealMatrix>(S, Eigen::EigenvaluesOnly)
              .eigenvalues()
              .minCoeff();
      CHECK(min_eig >= -1e-10 * S.trace());
    }
  }
}

TEST_CASE("spd_inverse") {
  std::mt19937_64 gen(5);
  const RealMatrix X = testing_support::random_matrix(gen, 50, 4);
  const RealMatrix M = gram_mean(X);
  CHECK(max_abs_diff(spd_inverse(M) * M, RealMatrix::Identity(4, 4)) < 1e-12);

  RealMatrix singular = M;
  singular.row(3) = singular.row(2);
  singular.col(3) = singular.col(2);
  CHECK_THROWS_AS(spd_inverse(singular), RankDeficientError);
  CHECK_THROWS_AS(spd_inverse(RealMatrix::Ones(2, 3)), DimensionError);
}
