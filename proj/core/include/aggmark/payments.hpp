#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggmark/catalogue.hpp"

namespace aggmark {

/// sum_i time_i(s) * duration_i(z), with s calendar time and z the time
/// spent in the current macrostate spell.
class PaymentFunction {
 public:
  struct Term {
    ScalarFunction time;
    ScalarFunction duration;
  };

  PaymentFunction() = default;
  explicit PaymentFunction(std::vector<Term> terms);
  static PaymentFunction of_time(ScalarFunction f);
  static PaymentFunction separable(ScalarFunction time, ScalarFunction duration);

  double operator()(double s, double z) const;
  /// Time-only factor of a duration-independent function.
  double time_part(double s) const;
  bool is_zero() const { return terms_.empty(); }
  bool depends_on_duration() const;
  const std::vector<Term>& terms() const { return terms_; }
  std::vector<double> time_breakpoints() const;
  std::vector<double> duration_breakpoints() const;

  friend PaymentFunction operator+(const PaymentFunction& a, const PaymentFunction& b);

 private:
  std::vector<Term> terms_;
};

/// Sojourn rates b_j(s, z), transition payments b_jk(s, z), horizon and
/// deterministic interest. Macrostates are 0-based.
struct PaymentSpec {
  std::vector<PaymentFunction> sojourn;
  std::vector<std::vector<PaymentFunction>> transition;
  double horizon = 0.0;
  ScalarFunction interest;
  /// Declared duration independence; checked against the payment functions.
  std::optional<bool> declared_duration_independent;

  static PaymentSpec zero(int macrostates, double horizon,
                          ScalarFunction interest = {});

  int macrostates() const { return static_cast<int>(sojourn.size()); }
  /// 0 after the horizon.
  double sojourn_rate(int j, double s, double z) const;
  double transition_payment(int j, int k, double s, double z) const;

  bool duration_independent() const;
  bool is_zero() const;
  std::vector<double> time_breakpoints() const;
  std::vector<double> duration_breakpoints() const;
  /// exp(-int_a^b r).
  double discount(double a, double b) const;

  /// Extra macrostates with zero payments appended.
  PaymentSpec extended(int macrostates) const;

  /// Throws ValidationError if the shape does not match `macrostates`, or if
  /// a declared duration independence is contradicted by sampling.
  void check(int macrostates) const;

  friend PaymentSpec operator+(const PaymentSpec& a, const PaymentSpec& b);
};

/// Document:
///   horizon     number
///   interest    catalogue function (default 0)
///   sojourn     [{state, time?, duration?} | {state, terms: [{time?, duration?}]}]
///   transition  [{from, to, time?, duration?} | {from, to, terms: [...]}]
///   duration_independent  optional boolean
/// Missing time or duration factors default to 1.
PaymentSpec payments_from_json(const nlohmann::json& doc, int macrostates,
                               const std::string& pointer = "");
nlohmann::json payments_to_json(const PaymentSpec& spec);

}  // namespace aggmark
