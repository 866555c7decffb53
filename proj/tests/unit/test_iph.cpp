#include <cmath>

#include <gtest/gtest.h>

#include "aggmark/catalogue.hpp"
#include "aggmark/error.hpp"
#include "aggmark/iph.hpp"

using namespace aggmark;

namespace {

IphRepresentation single_phase(const ScalarFunction& mu) {
  return {RowVector::Ones(1),
          MatrixFunction(1, [mu](double x) { return Matrix::Constant(1, 1, -mu(x)); })};
}

}  // namespace

class SinglePhase : public ::testing::TestWithParam<ScalarFunction> {};

TEST_P(SinglePhase, SurvivalAndDensityClosedForm) {
  const ScalarFunction mu = GetParam();
  const auto rep = single_phase(mu);
  const auto g = TimeGrid::uniform(0, 10, 100, 10);
  for (double x : {0.0, 0.7, 2.5, 6.0, 10.0}) {
    const double s = std::exp(-mu.integral(0, x));
    EXPECT_NEAR(iph_survival(rep, x, g), s, 1e-9);
    EXPECT_NEAR(iph_cdf(rep, x, g), 1.0 - s, 1e-9);
    EXPECT_NEAR(iph_density(rep, x, g), mu(x) * s, 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Intensities, SinglePhase,
                         ::testing::Values(ScalarFunction::constant(0.4),
                                           ScalarFunction::linear(0.05, 0.03),
                                           ScalarFunction::gompertz_makeham(5e-4, 5.346e-5,
                                                                            1.0914)));

TEST(Iph, OvershootTowerProperty) {
  const Matrix t{{-1.0, 0.6}, {0.2, -0.5}};
  IphRepresentation rep{RowVector{{0.3, 0.7}},
                        MatrixFunction(2, [t](double x) { return Matrix(t * (1.0 + 0.1 * x)); })};
  const auto g = TimeGrid::uniform(0, 8, 80);
  const double s = 2.0;
  const auto over = overshoot_representation(rep, s, g);
  const auto gs = g.shifted(s);
  for (double x : {0.0, 0.5, 1.7, 4.0}) {
    EXPECT_NEAR(iph_survival(rep, s + x, g), iph_survival(rep, s, g) * iph_survival(over, x, gs),
                1e-9);
  }
  EXPECT_NEAR(over.initial.sum(), 1.0, 1e-14);
}

TEST(Iph, OvershootOnNullMass) {
  const auto rep = single_phase(ScalarFunction::constant(40.0));
  const auto g = TimeGrid::uniform(0, 2, 200);
  EXPECT_THROW(overshoot_representation(rep, 1.5, g), ConditioningOnNull);
}

TEST(Iph, ValidateRejectsBadInitial) {
  IphRepresentation rep{RowVector{{0.5, 0.6}},
                        MatrixFunction(2, [](double) { return Matrix(-Matrix::Identity(2, 2)); })};
  EXPECT_THROW(rep.validate(TimeGrid::uniform(0, 1, 2)), ValidationError);
  IphRepresentation neg{RowVector{{1.0, 0.0}},
                        MatrixFunction(2, [](double) { return Matrix{{-1.0, -0.5}, {0.0, -1.0}}; })};
  EXPECT_THROW(neg.validate(TimeGrid::uniform(0, 1, 2)), ValidationError);
}

TEST(Iph, TwoPhaseSurvivalMatchesExponential) {
  // Erlang(2, 1): survival (1 + x) e^{-x}
  IphRepresentation rep{RowVector{{1.0, 0.0}},
                        MatrixFunction(2, [](double) { return Matrix{{-1.0, 1.0}, {0.0, -1.0}}; })};
  const auto g = TimeGrid::uniform(0, 5, 50);
  for (double x : {0.5, 1.0, 3.0}) {
    EXPECT_NEAR(iph_survival(rep, x, g), (1.0 + x) * std::exp(-x), 1e-9);
    EXPECT_NEAR(iph_density(rep, x, g), x * std::exp(-x), 1e-9);
  }
}
