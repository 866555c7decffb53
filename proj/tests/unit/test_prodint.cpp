#include <cmath>

#include <gtest/gtest.h>

#include "aggmark/error.hpp"
#include "aggmark/prodint.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace aggmark;

namespace {

MatrixFunction constant_fn(const Matrix& a) {
  return MatrixFunction(static_cast<int>(a.rows()), [a](double) { return a; });
}

}  // namespace

TEST(TimeGrid, UniformAndFind) {
  const auto g = TimeGrid::uniform(0.0, 1.0, 4, 6);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g[2], 0.5);
  EXPECT_EQ(g.substeps(), 6);
  EXPECT_EQ(g.find(0.75).value(), 3u);
  EXPECT_EQ(g.find(0.75 + 1e-14).value(), 3u);
  EXPECT_FALSE(g.find(0.7).has_value());
  EXPECT_TRUE(g.covers(0.1, 0.9));
  EXPECT_FALSE(g.covers(-0.1, 0.9));
}

TEST(TimeGrid, Invalid) {
  EXPECT_THROW(TimeGrid({0.0, 0.0, 1.0}), DomainError);
  EXPECT_THROW(TimeGrid({0.0}), DomainError);
  EXPECT_THROW(TimeGrid({0.0, 1.0}, 0), DomainError);
}

TEST(TimeGrid, Edits) {
  const auto g = TimeGrid::uniform(0.0, 1.0, 2);
  std::vector<double> extra{0.25, 0.5};
  const auto h = g.with_points(extra);
  EXPECT_EQ(h.size(), 4u);
  const auto r = h.restricted(0.1, 0.6);
  EXPECT_EQ(std::vector<double>(r.points().begin(), r.points().end()),
            (std::vector<double>{0.1, 0.25, 0.5, 0.6}));
  const auto s = g.shifted(0.5);
  EXPECT_DOUBLE_EQ(s.front(), -0.5);
}

TEST(TimeGrid, SpanGridExtendsBeyondReference) {
  const auto g = TimeGrid::uniform(10.0, 20.0, 100);
  std::vector<double> bps{3.3};
  const auto s = span_grid(g, 2.0, 12.0, bps);
  EXPECT_DOUBLE_EQ(s.front(), 2.0);
  EXPECT_DOUBLE_EQ(s.back(), 12.0);
  EXPECT_TRUE(s.find(3.3).has_value());
  EXPECT_TRUE(s.find(11.0).has_value());
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LE(s[i] - s[i - 1], 0.1 + 1e-12);
}

TEST(ProductIntegral, IdentityAtEqualTimes) {
  const Matrix a = fixtures::random_generator(4, 1.0, 3);
  const auto g = TimeGrid::uniform(0, 1, 10);
  const Matrix f = product_integral(constant_fn(a), 0.3, 0.3, g);
  EXPECT_EQ(f, Matrix::Identity(4, 4));
}

TEST(ProductIntegral, ConstantGeneratorMatchesExponential) {
  const auto g = TimeGrid::uniform(0, 2, 40);
  for (unsigned seed = 0; seed < 10; ++seed) {
    const int d = 1 + static_cast<int>(seed % 6);
    const Matrix a = fixtures::random_generator(d, 2.0, seed);
    const Matrix f = product_integral(constant_fn(a), 0.0, 2.0, g);
    EXPECT_LT((f - oracles::expm(2.0 * a)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((f.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  }
}

TEST(ProductIntegral, ChapmanKolmogorov) {
  const Matrix a = fixtures::random_generator(3, 1.0, 9);
  const MatrixFunction fn(3, [a](double t) { return Matrix(a * (1.0 + 0.5 * std::sin(t))); });
  const auto g = TimeGrid::uniform(0, 3, 60, 20);
  const Matrix ab = product_integral(fn, 0.4, 1.3, g);
  const Matrix bc = product_integral(fn, 1.3, 2.7, g);
  const Matrix ac = product_integral(fn, 0.4, 2.7, g);
  EXPECT_LT((ab * bc - ac).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ProductIntegral, ScalarTimeVarying) {
  const MatrixFunction fn(1, [](double t) { return Matrix::Constant(1, 1, -0.1 - 0.2 * t); });
  const auto g = TimeGrid::uniform(0, 5, 50);
  const Matrix f = product_integral(fn, 1.0, 4.0, g);
  const double exact = std::exp(-(0.1 * 3.0 + 0.1 * (16.0 - 1.0)));
  EXPECT_NEAR(f(0, 0), exact, 1e-10);
}

TEST(ProductIntegral, JumpOnGridPoint) {
  const auto step = ScalarFunction::piecewise_constant({1.0}, {0.5, 3.0});
  const MatrixFunction fn(1, [step](double t) { return Matrix::Constant(1, 1, -step(t)); });
  const auto g = TimeGrid::uniform(0, 2, 4, 200);
  EXPECT_NEAR(product_integral(fn, 0.0, 2.0, g)(0, 0), std::exp(-3.5), 1e-10);
}

TEST(ProductIntegral, Sweeps) {
  const Matrix a = fixtures::random_generator(3, 1.0, 5);
  const MatrixFunction fn(3, [a](double t) { return Matrix(a * (1.0 + 0.1 * t)); });
  const auto g = TimeGrid::uniform(0, 2, 8);
  const auto fwd = forward_sweep(fn, 0.5, g);
  ASSERT_EQ(fwd.size(), 7u);
  EXPECT_EQ(fwd[0], Matrix::Identity(3, 3));
  for (std::size_t i = 1; i < fwd.size(); ++i)
    EXPECT_LT((fwd[i] - product_integral(fn, 0.5, g[i + 2], g)).cwiseAbs().maxCoeff(), 1e-13);
  const auto bwd = backward_sweep(fn, 1.5, g);
  ASSERT_EQ(bwd.size(), 7u);
  EXPECT_LT((bwd.back() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
  for (std::size_t i = 0; i < bwd.size(); ++i)
    EXPECT_LT((bwd[i] - product_integral(fn, g[i], 1.5, g)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ProductIntegral, BlowupNamesTime) {
  const MatrixFunction fn(1, [](double) { return Matrix::Constant(1, 1, 400.0); });
  const auto g = TimeGrid::uniform(0, 1, 10);
  try {
    product_integral(fn, 0.0, 1.0, g);
    FAIL() << "expected NumericalBlowup";
  } catch (const NumericalBlowup& e) {
    EXPECT_GT(e.time(), 0.0);
    EXPECT_LE(e.time(), 1.0);
  }
}

TEST(ProductIntegral, ShapeChecked) {
  const MatrixFunction fn(2, [](double) { return Matrix::Zero(3, 3); });
  EXPECT_THROW(fn(0.0), DomainError);
}

TEST(ProductIntegral, ReversedInterval) {
  const MatrixFunction fn(1, [](double) { return Matrix::Zero(1, 1); });
  const auto g = TimeGrid::uniform(0, 1, 10);
  EXPECT_THROW(product_integral(fn, 0.8, 0.2, g), DomainError);
}
