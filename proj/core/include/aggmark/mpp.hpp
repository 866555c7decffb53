#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "aggmark/iph.hpp"
#include "aggmark/model.hpp"
#include "aggmark/sim.hpp"

namespace aggmark {

/// Observed macrostate jumps s_n = (0, 0, t_1, y_1, ..., t_n, y_n) with
/// 0-based macrostates. The first jump is always (0, 0).
class History {
 public:
  History();
  /// `jumps` excludes the leading (0, 0).
  explicit History(std::vector<std::pair<double, int>> jumps);
  static History from_path(const SimPath& path, double up_to);

  std::size_t n() const { return times_.size() - 1; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<int>& states() const { return states_; }
  double last_time() const { return times_.back(); }
  int last_state() const { return states_.back(); }
  /// Same history with one more jump.
  History extended(double t, int state) const;

 private:
  std::vector<double> times_;
  std::vector<int> states_;
};

/// Unnormalised alpha(s_n) = values * exp(log_scale).
struct AlphaVector {
  RowVector values;
  double log_scale = 0.0;

  RowVector normalized() const { return values / values.sum(); }
  double log_mass() const { return std::log(values.sum()) + log_scale; }
};

inline constexpr double kAlphaRescaleFloor = 1e-250;

/// Left-to-right product of stay product integrals and jump blocks.
/// Throws ImpossibleHistory when the mass vanishes.
AlphaVector alpha(const AggregateModel& model, const History& history,
                  const TimeGrid& grid);

/// P(T_{n+1} > t | s_n).
double sojourn_survival(const AggregateModel& model, const History& history, double t,
                        const TimeGrid& grid);

/// P(Y_{n+1} = k | s_n, T_{n+1} = t) for every macrostate k (0 at y_n).
Vector mark_distribution(const AggregateModel& model, const History& history, double t,
                         const TimeGrid& grid);

/// lambda_jk(t) on the sojourn following s_n; 0 when j != y_n.
double compensator_intensity(const AggregateModel& model, const History& history, int j,
                             int k, double t, const TimeGrid& grid);

/// (alpha-hat, M_{y_n y_n}(t_n + .)): the law of T_{n+1} - t_n.
IphRepresentation sojourn_representation(const AggregateModel& model,
                                         const History& history, const TimeGrid& grid);

/// Lambda_jk(c) for each checkpoint c along the macrostate history of a path
/// started at time 0, integrating (v, Lambda) with RK4 steps of at most `step`.
std::vector<double> cumulative_compensator(const AggregateModel& model, const SimPath& path,
                                           int j, int k, std::span<const double> checkpoints,
                                           double step);

/// N_jk(c) - Lambda_jk(c) per checkpoint.
Functional martingale_residual_functional(const AggregateModel& model, int j, int k,
                                          std::vector<double> checkpoints, double step);

struct SmallHCheck {
  double lhs = 0.0;
  double lhs_std_error = 0.0;
  double rhs = 0.0;
};

/// rhs = alpha(s_n) F(t_n, t) M_{y_n k}(t) e_micro h / alpha(s_n) 1; lhs is the
/// simulated P(t < T_{n+1} <= t + h, X(T_{n+1}) = (k, micro) | s_n) over
/// n_paths paths (skipped when n_paths is 0).
SmallHCheck small_h_identity_check(const AggregateModel& model, const History& history,
                                   int k, int micro, double t, double h,
                                   const TimeGrid& grid, std::size_t n_paths = 0,
                                   std::uint64_t seed = 1);

}  // namespace aggmark
