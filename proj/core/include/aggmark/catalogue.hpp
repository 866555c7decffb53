#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace aggmark {

/// Deterministic function of one real argument (time or duration) built from
/// a small serializable expression catalogue.
///
/// Leaf kinds:
///   constant            v
///   linear              a + b x
///   gompertz_makeham    a + b c^x
///   logistic            lower + (upper - lower) / (1 + exp(-(x - midpoint) / scale))
///   piecewise_constant  values[i] between knots[i-1] and knots[i]; right-continuous
///                       by default, left-continuous when `left_continuous` is set
/// Composite kinds:
///   sum, product, affine (offset + factor * f(x))
///
/// Instances are immutable and cheap to copy (shared expression tree).
class ScalarFunction {
 public:
  enum class Kind {
    constant,
    linear,
    gompertz_makeham,
    logistic,
    piecewise_constant,
    sum,
    product,
    affine
  };

  /// The zero function.
  ScalarFunction();

  static ScalarFunction constant(double value);
  static ScalarFunction linear(double intercept, double slope);
  static ScalarFunction gompertz_makeham(double a, double b, double c);
  static ScalarFunction logistic(double lower, double upper, double midpoint,
                                 double scale);
  /// `values.size()` must equal `knots.size() + 1`; knots strictly increasing.
  static ScalarFunction piecewise_constant(std::vector<double> knots,
                                           std::vector<double> values,
                                           bool left_continuous = false);
  static ScalarFunction sum(std::vector<ScalarFunction> terms);
  static ScalarFunction product(std::vector<ScalarFunction> factors);
  static ScalarFunction affine(double offset, double factor, ScalarFunction of);

  /// 1 for x > threshold, 0 otherwise (left-continuous step).
  static ScalarFunction step_after(double threshold);
  /// 1 for x < threshold, 0 otherwise (right-continuous step).
  static ScalarFunction step_before(double threshold);

  double operator()(double x) const;

  /// Exact antiderivative difference where a closed form exists; products fall
  /// back to composite Gauss-Legendre split at breakpoints.
  double integral(double a, double b) const;

  /// Sorted points where the function may be discontinuous.
  std::vector<double> breakpoints() const;

  Kind kind() const;
  std::optional<double> constant_value() const;
  bool is_zero() const;

  nlohmann::json to_json() const;
  /// Accepts a bare number as a constant. Errors are SchemaError carrying
  /// `pointer`.
  static ScalarFunction from_json(const nlohmann::json& doc,
                                  const std::string& pointer = "");

  struct Node;

 private:
  explicit ScalarFunction(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

bool operator==(const ScalarFunction& a, const ScalarFunction& b);

}  // namespace aggmark
