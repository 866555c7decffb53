#include <cmath>

#include <gtest/gtest.h>

#include "aggmark/catalogue.hpp"
#include "aggmark/error.hpp"

using aggmark::ScalarFunction;

namespace {

double midpoint_piece(const ScalarFunction& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += f(a + (i + 0.5) * h);
  return s * h;
}

// split at the jumps so the midpoint rule keeps its order
double midpoint_rule(const ScalarFunction& f, double a, double b, int n = 100000) {
  std::vector<double> cuts{a};
  for (double x : f.breakpoints())
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) s += midpoint_piece(f, cuts[i], cuts[i + 1], n);
  return s;
}

}  // namespace

TEST(Catalogue, LeafValues) {
  EXPECT_DOUBLE_EQ(ScalarFunction::constant(2.5)(7.0), 2.5);
  EXPECT_DOUBLE_EQ(ScalarFunction::linear(1.0, 0.5)(4.0), 3.0);
  EXPECT_NEAR(ScalarFunction::gompertz_makeham(0.1, 0.2, 1.1)(3.0), 0.1 + 0.2 * std::pow(1.1, 3.0),
              1e-15);
  const auto lg = ScalarFunction::logistic(1.0, 3.0, 5.0, 2.0);
  EXPECT_NEAR(lg(5.0), 2.0, 1e-15);
  EXPECT_NEAR(lg(1e6), 3.0, 1e-12);
  EXPECT_TRUE(ScalarFunction().is_zero());
  EXPECT_DOUBLE_EQ(ScalarFunction()(3.0), 0.0);
}

TEST(Catalogue, PiecewiseContinuity) {
  const auto right = ScalarFunction::piecewise_constant({1.0, 2.0}, {0.0, 1.0, 3.0});
  EXPECT_DOUBLE_EQ(right(0.5), 0.0);
  EXPECT_DOUBLE_EQ(right(1.0), 1.0);
  EXPECT_DOUBLE_EQ(right(2.0), 3.0);
  const auto left = ScalarFunction::piecewise_constant({1.0}, {0.0, 1.0}, true);
  EXPECT_DOUBLE_EQ(left(1.0), 0.0);
  EXPECT_DOUBLE_EQ(left(1.0 + 1e-12), 1.0);
  EXPECT_THROW(ScalarFunction::piecewise_constant({2.0, 1.0}, {0, 1, 2}), aggmark::DomainError);
  EXPECT_THROW(ScalarFunction::piecewise_constant({1.0}, {0.0}), aggmark::DomainError);
}

TEST(Catalogue, Steps) {
  const auto after = ScalarFunction::step_after(0.25);
  EXPECT_DOUBLE_EQ(after(0.25), 0.0);
  EXPECT_DOUBLE_EQ(after(0.2500001), 1.0);
  const auto before = ScalarFunction::step_before(65.0);
  EXPECT_DOUBLE_EQ(before(64.999), 1.0);
  EXPECT_DOUBLE_EQ(before(65.0), 0.0);
}

TEST(Catalogue, Composites) {
  const auto a = ScalarFunction::linear(1.0, 2.0);
  const auto b = ScalarFunction::constant(3.0);
  EXPECT_DOUBLE_EQ(ScalarFunction::sum({a, b})(2.0), 8.0);
  EXPECT_DOUBLE_EQ(ScalarFunction::product({a, b})(2.0), 15.0);
  EXPECT_DOUBLE_EQ(ScalarFunction::affine(1.0, -1.0, b)(0.0), -2.0);
}

TEST(Catalogue, IntegralsMatchQuadrature) {
  const std::vector<ScalarFunction> fs{
      ScalarFunction::constant(0.3),
      ScalarFunction::linear(0.1, 0.02),
      ScalarFunction::gompertz_makeham(5e-4, 5.346e-5, 1.0914),
      ScalarFunction::logistic(0.1, 0.9, 3.0, 0.7),
      ScalarFunction::piecewise_constant({1.0, 2.5}, {0.2, 0.7, 0.1}),
      ScalarFunction::sum({ScalarFunction::linear(0, 1), ScalarFunction::constant(2)}),
      ScalarFunction::product({ScalarFunction::linear(0, 1), ScalarFunction::step_after(1.5)}),
      ScalarFunction::affine(0.05, 2.0, ScalarFunction::gompertz_makeham(0, 1e-3, 1.1))};
  for (const auto& f : fs) EXPECT_NEAR(f.integral(0.3, 4.2), midpoint_rule(f, 0.3, 4.2), 1e-8);
  EXPECT_NEAR(fs[1].integral(4.2, 0.3), -fs[1].integral(0.3, 4.2), 1e-15);
}

TEST(Catalogue, Breakpoints) {
  const auto f = ScalarFunction::sum({ScalarFunction::step_after(1.0),
                                      ScalarFunction::piecewise_constant({2.0, 3.0}, {0, 1, 0})});
  EXPECT_EQ(f.breakpoints(), (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_TRUE(ScalarFunction::linear(1, 1).breakpoints().empty());
}

TEST(Catalogue, ConstantDetection) {
  EXPECT_EQ(ScalarFunction::constant(2.0).constant_value().value(), 2.0);
  EXPECT_FALSE(ScalarFunction::linear(1, 1).constant_value().has_value());
  EXPECT_TRUE(ScalarFunction::constant(0.0).is_zero());
}

TEST(Catalogue, JsonRoundTrip) {
  const std::vector<ScalarFunction> fs{
      ScalarFunction::constant(0.3),
      ScalarFunction::linear(0.1, 0.02),
      ScalarFunction::gompertz_makeham(5e-4, 5.346e-5, 1.0914),
      ScalarFunction::logistic(0.1, 0.9, 3.0, 0.7),
      ScalarFunction::piecewise_constant({1.0}, {0.2, 0.7}, true),
      ScalarFunction::sum({ScalarFunction::linear(0, 1), ScalarFunction::constant(2)}),
      ScalarFunction::product({ScalarFunction::linear(0, 1), ScalarFunction::constant(2)}),
      ScalarFunction::affine(0.05, 2.0, ScalarFunction::constant(1))};
  for (const auto& f : fs) {
    const auto g = ScalarFunction::from_json(f.to_json());
    EXPECT_TRUE(f == g);
    for (double x : {0.0, 0.5, 1.0, 2.0, 7.5}) EXPECT_DOUBLE_EQ(f(x), g(x));
  }
  EXPECT_DOUBLE_EQ(ScalarFunction::from_json(nlohmann::json(1.5))(3.0), 1.5);
}

TEST(Catalogue, SchemaErrorsCarryPointer) {
  try {
    ScalarFunction::from_json(nlohmann::json{{"type", "linear"}, {"intercept", 1.0}}, "/f");
    FAIL() << "expected SchemaError";
  } catch (const aggmark::SchemaError& e) {
    EXPECT_EQ(e.pointer(), "/f");
  }
  try {
    ScalarFunction::from_json(
        nlohmann::json{{"type", "sum"}, {"terms", {1.0, {{"type", "nope"}}}}}, "/g");
    FAIL() << "expected SchemaError";
  } catch (const aggmark::SchemaError& e) {
    EXPECT_EQ(e.pointer(), "/g/terms/1/type");
  }
  EXPECT_THROW(ScalarFunction::from_json(nlohmann::json("x")), aggmark::SchemaError);
}
