#pragma once

#include <stdexcept>
#include <string>

namespace aggmark {

// Base of every error the engine raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arguments outside an operation's domain (t > s, negative durations, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A product-integral sweep produced non-finite or exploding entries.
class NumericalBlowup : public Error {
 public:
  NumericalBlowup(double time, const std::string& what)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Structural or sampled invariant of an input object failed.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Normalising constant of a conditional law fell below the support threshold.
class ConditioningOnNull : public Error {
 public:
  using Error::Error;
};

// Exit-rate identity -M_jj 1 = sum_k M_jk 1 violated.
class InconsistentModel : public Error {
 public:
  using Error::Error;
};

// Observed history has zero likelihood under the model.
class ImpossibleHistory : public Error {
 public:
  using Error::Error;
};

// Total exit rate out of the current macrostate is zero.
class NoJumpPossible : public Error {
 public:
  using Error::Error;
};

// Behaviour partition does not satisfy the zero-block constraints.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Operation called with inputs it does not support (e.g. fast path on
// duration-dependent payments).
class MisuseError : public Error {
 public:
  using Error::Error;
};

// Thinning bound was exceeded at a candidate time.
class BoundViolation : public Error {
 public:
  using Error::Error;
};

// Rejection sampler could not produce paths satisfying the conditioning.
class InfeasibleConditioning : public Error {
 public:
  using Error::Error;
};

// Malformed document; `pointer` is the JSON pointer of the offending value.
class SchemaError : public Error {
 public:
  SchemaError(std::string pointer, const std::string& message)
      : Error(pointer.empty() ? message : pointer + ": " + message),
        pointer_(std::move(pointer)),
        message_(message) {}
  const std::string& pointer() const noexcept { return pointer_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string pointer_;
  std::string message_;
};

}  // namespace aggmark
