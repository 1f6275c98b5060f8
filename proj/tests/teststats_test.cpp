#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "psinf/experiments.hpp"
#include "psinf/teststats.hpp"
#include "support/expect_error.hpp"
#include "support/oracles.hpp"

namespace {

using psinf::ErrorCode;
using psinf::Matrix;
using psinf::Vector;

psinf::SyntheticSummary from_scatter(const Matrix& s, Eigen::Index n) { return psinf::summary_from_scatter(s, n); }

Matrix random_scatter(std::mt19937_64& gen, Eigen::Index p, Eigen::Index n) {
  const Matrix x = oracle::normal_rows(gen, Vector::Zero(p), psinf::builtin_sigma(4).topLeftCorner(p, p), n);
  return oracle::scatter(x);
}

Matrix permutation(const std::vector<int>& order) {
  const auto p = static_cast<Eigen::Index>(order.size());
  Matrix m = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) m(i, order[i]) = 1.0;
  return m;
}

TEST(Summarize, HandExample) {
  const psinf::DataMatrix v = (psinf::DataMatrix(3, 2) << 0, 0, 2, 2, 4, -2).finished();
  // xbar = (2, 0); deviations (-2,0), (0,2), (2,-2)
  const psinf::SyntheticSummary s = psinf::summarize(v);
  EXPECT_EQ(s.n, 3);
  EXPECT_EQ(s.scatter_star.dof, 2);
  EXPECT_DOUBLE_EQ(s.mean_v(0), 2.0);
  EXPECT_DOUBLE_EQ(s.s()(0, 0), 8.0);
  EXPECT_DOUBLE_EQ(s.s()(1, 1), 8.0);
  EXPECT_DOUBLE_EQ(s.s()(0, 1), -4.0);
}

TEST(Summarize, Errors) {
  EXPECT_EQ(code_of([] { psinf::summarize(psinf::DataMatrix::Ones(4, 4)); }), ErrorCode::TooFewRows);
  EXPECT_EQ(code_of([] { psinf::summarize(psinf::DataMatrix::Ones(6, 2)); }), ErrorCode::SingularSample);
}

TEST(T1, Examples) {
  // evaluated in log space, so exact up to rounding
  EXPECT_NEAR(psinf::t1_star(from_scatter(Matrix::Identity(4, 4), 10), psinf::SpdMatrix::identity(4)), 6561.0,
              6561.0 * 1e-12);
  const Matrix s = 2.0 * Matrix::Identity(2, 2);
  EXPECT_NEAR(psinf::t1_star(from_scatter(s, 3), psinf::SpdMatrix(Matrix(4.0 * Matrix::Identity(2, 2)))), 1.0,
              1e-14);
}

TEST(T1, DimensionMismatch) {
  EXPECT_EQ(code_of([] { psinf::t1_star(from_scatter(Matrix::Identity(4, 4), 10), psinf::SpdMatrix::identity(3)); }),
            ErrorCode::DimensionMismatch);
}

TEST(T2, Examples) {
  EXPECT_DOUBLE_EQ(psinf::t2_star(from_scatter(7.0 * Matrix::Identity(4, 4), 10)), 1.0);
  const Matrix d = (Matrix(2, 2) << 1, 0, 0, 4).finished();
  EXPECT_NEAR(psinf::t2_star(from_scatter(d, 10)), 0.8, 1e-14);
  EXPECT_DOUBLE_EQ(psinf::t2_star(from_scatter(Matrix::Constant(1, 1, 3.7), 5)), 1.0);
}

TEST(T2, ScaleInvariantAndBounded) {
  std::mt19937_64 gen(1);
  for (int r = 0; r < 50; ++r) {
    const Matrix s = random_scatter(gen, 4, 10);
    const double t = psinf::t2_star(from_scatter(s, 10));
    EXPECT_GT(t, 0.0);
    EXPECT_LE(t, 1.0);
    EXPECT_NEAR(psinf::t2_star(from_scatter(123.0 * s, 10)), t, 1e-12);
  }
}

TEST(T3, Examples) {
  EXPECT_DOUBLE_EQ(psinf::t3_star(from_scatter(psinf::builtin_sigma(4), 10), 2), 1.0);
  const Matrix rho = (Matrix(2, 2) << 1, 0.5, 0.5, 1).finished();
  EXPECT_NEAR(psinf::t3_star(from_scatter(rho, 10), 1), 0.75, 1e-14);
  EXPECT_EQ(code_of([] { psinf::t3_star(from_scatter(Matrix::Identity(4, 4), 10), 4); }), ErrorCode::BadBlockSize);
  EXPECT_EQ(code_of([] { psinf::t3_star(from_scatter(Matrix::Identity(4, 4), 10), 0); }), ErrorCode::BadBlockSize);
}

TEST(T3, InvariantUnderBlockSwap) {
  std::mt19937_64 gen(2);
  const Matrix swap = permutation({1, 2, 3, 0});  // moves block {0} to the end
  for (int r = 0; r < 20; ++r) {
    const Matrix s = random_scatter(gen, 4, 12);
    const double t = psinf::t3_star(from_scatter(s, 12), 1);
    EXPECT_NEAR(psinf::t3_star(from_scatter(swap * s * swap.transpose(), 12), 3), t, 1e-12);
  }
}

TEST(T4, Examples) {
  const Matrix s = (Matrix(2, 2) << 2, 1, 1, 2).finished();
  const auto sum = from_scatter(s, 10);
  EXPECT_NEAR(psinf::t4_star(sum, 1, psinf::CoefficientMatrix{Matrix::Zero(1, 1)}), 1.0 / 3.0, 1e-14);
  EXPECT_EQ(psinf::t4_star(sum, 1, psinf::regression_coefficients(sum, 1)), 0.0);
  const Matrix d = psinf::regression_coefficients(sum, 1).delta;
  EXPECT_DOUBLE_EQ(d(0, 0), 0.5);
}

TEST(T4, PlugInIsExactlyZeroForRandomScatter) {
  std::mt19937_64 gen(3);
  for (int r = 0; r < 20; ++r) {
    const auto sum = from_scatter(random_scatter(gen, 4, 10), 10);
    for (Eigen::Index p1 : {1, 2})
      EXPECT_EQ(psinf::t4_star(sum, p1, psinf::regression_coefficients(sum, p1)), 0.0);
  }
}

TEST(T4, Errors) {
  const auto sum = from_scatter(Matrix::Identity(4, 4), 10);
  EXPECT_EQ(code_of([&] { psinf::t4_star(sum, 3, psinf::CoefficientMatrix{Matrix::Zero(3, 1)}); }),
            ErrorCode::BadBlockSize);
  EXPECT_EQ(code_of([&] { psinf::t4_star(sum, 2, psinf::CoefficientMatrix{Matrix::Zero(2, 1)}); }),
            ErrorCode::DimensionMismatch);
}

TEST(T4, SingleResponseRelatesToT3) {
  // with p1 = 1 and delta0 = 0 the numerator is s11 minus the Schur complement
  std::mt19937_64 gen(4);
  for (int r = 0; r < 20; ++r) {
    const auto sum = from_scatter(random_scatter(gen, 4, 15), 15);
    const double t3 = psinf::t3_star(sum, 1);
    const double t4 = psinf::t4_star(sum, 1, psinf::CoefficientMatrix{Matrix::Zero(1, 3)});
    EXPECT_NEAR(t4, 1.0 / t3 - 1.0, 1e-9 * (1.0 + t4));
  }
}

TEST(Statistics, MatchIndependentOracle) {
  std::mt19937_64 gen(5);
  const Matrix sigma0 = psinf::builtin_sigma(4);
  for (int r = 0; r < 30; ++r) {
    const Eigen::Index n = 10 + r;
    const Matrix s = random_scatter(gen, 4, n);
    const auto sum = from_scatter(s, n);
    EXPECT_NEAR(psinf::t1_star(sum, psinf::SpdMatrix(sigma0)) / oracle::t1(s, sigma0, n), 1.0, 1e-10);
    EXPECT_NEAR(psinf::t2_star(sum), oracle::t2(s), 1e-12);
    for (Eigen::Index p1 : {1, 2, 3}) EXPECT_NEAR(psinf::t3_star(sum, p1), oracle::t3(s, p1), 1e-12);
    for (Eigen::Index p1 : {1, 2}) {
      Matrix delta0(p1, 4 - p1);
      delta0.setConstant(0.25);
      const double expected = oracle::t4(s, p1, delta0);
      EXPECT_NEAR(psinf::t4_star(sum, p1, psinf::CoefficientMatrix{delta0}), expected, 1e-9 * (1.0 + expected));
    }
  }
}

TEST(Statistics, InvariantUnderWithinBlockPermutation) {
  std::mt19937_64 gen(6);
  const Matrix full = permutation({3, 1, 0, 2});
  const Matrix within = permutation({1, 0, 3, 2});
  for (int r = 0; r < 20; ++r) {
    const Matrix s = random_scatter(gen, 4, 11);
    const auto a = from_scatter(s, 11);
    const auto b = from_scatter(full * s * full.transpose(), 11);
    EXPECT_NEAR(psinf::t2_star(a), psinf::t2_star(b), 1e-12);
    EXPECT_NEAR(psinf::t1_star(a, psinf::SpdMatrix::identity(4)) / psinf::t1_star(b, psinf::SpdMatrix::identity(4)),
                1.0, 1e-12);
    const auto c = from_scatter(within * s * within.transpose(), 11);
    EXPECT_NEAR(psinf::t3_star(a, 2), psinf::t3_star(c, 2), 1e-12);
    const Matrix zero = Matrix::Zero(2, 2);
    EXPECT_NEAR(psinf::t4_star(a, 2, {zero}), psinf::t4_star(c, 2, {zero}), 1e-9);
  }
}

}  // namespace
