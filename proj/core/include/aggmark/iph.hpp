#pragma once

#include "aggmark/prodint.hpp"

namespace aggmark {

/// Inhomogeneous phase-type law: absorption time of a chain started in π and
/// moving under the sub-intensity T(t).
struct IphRepresentation {
  RowVector initial;
  MatrixFunction subintensity;

  /// Checks the initial vector and samples T at the grid points.
  /// Throws ValidationError.
  void validate(const TimeGrid& grid) const;
};

/// π F(0, x) 1.
double iph_survival(const IphRepresentation& rep, double x,
                    const TimeGrid& grid);
/// 1 - survival.
double iph_cdf(const IphRepresentation& rep, double x, const TimeGrid& grid);
/// π F(0, x) t(x) with t(x) = -T(x) 1.
double iph_density(const IphRepresentation& rep, double x,
                   const TimeGrid& grid);

/// Conditional law of the remaining time given survival to s: initial
/// α(s) = π F(0,s) / (π F(0,s) 1), sub-intensity T(s + .). The returned
/// representation lives on a shifted clock; use grid.shifted(s) with it.
IphRepresentation overshoot_representation(const IphRepresentation& rep,
                                           double s, const TimeGrid& grid);

/// Mass below which conditioning is refused.
inline constexpr double kConditioningFloor = 1e-14;

}  // namespace aggmark
