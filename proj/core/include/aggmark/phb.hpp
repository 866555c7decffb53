#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggmark/cashflow.hpp"

namespace aggmark {

/// Partition of the macrostates into J0 (before exercise, contains the
/// initial macrostate) and J1 (after exercise), with scaling factors
/// rho(t, j, k) on J0 -> J1 transitions. Unlisted pairs have rho = 1.
struct BehaviourSpec {
  std::vector<int> before;  // J0, 0-based
  std::vector<int> after;   // J1, 0-based
  std::map<std::pair<int, int>, ScalarFunction> rho;

  ScalarFunction rho_of(int j, int k) const;
  bool in_before(int j) const;
  bool in_after(int j) const;
};

/// Realised exercise (tau, Z(tau-), Z(tau)).
struct Exercise {
  double time = 0.0;
  int from = 0;
  int to = 0;
};

/// Checks the partition and the zero J1 -> J0 blocks; throws StructuralError.
void check_behaviour(const AggregateModel& model, const BehaviourSpec& spec);
/// Throws ValidationError if some rho leaves (0, 1] at a sample time.
void check_rho(const BehaviourSpec& spec, std::span<const double> sample_times);

/// M̂: J0 -> J1 blocks scaled by rho, the removed mass sent to an appended
/// absorbing macrostate with one microstate. Reset structure is carried over.
AggregateModel transform(const AggregateModel& model, const BehaviourSpec& spec);

/// M̂, payments padded for the appended state, and the factor rho(tau, from,
/// to) applied after a realised exercise (1 without one). Checks that the
/// current macrostates lie in J0 (no exercise) or J1 (with one).
struct ScaledProblem {
  AggregateModel model;
  PaymentSpec payments;
  double factor = 1.0;
};
ScaledProblem prepare_scaled(const AggregateModel& model, const BehaviourSpec& spec,
                             const PaymentSpec& payments, const std::vector<int>& states,
                             double t, const TimeGrid& grid,
                             const std::optional<Exercise>& exercise = std::nullopt);

/// Multiplies every rate and accumulated column by `factor`.
void scale_table(CashFlowTable& table, double factor);

/// A^rho for spell conditionings (reset model). Before exercise the current
/// macrostates must lie in J0; with an exercise they must lie in J1 and the
/// result is multiplied by rho(tau, from, to).
CashFlowTable scaled_cashflow(const AggregateModel& model, const BehaviourSpec& spec,
                              const std::vector<SpellCondition>& conditions, double t,
                              const TimeGrid& grid, const PaymentSpec& payments,
                              const std::optional<Exercise>& exercise = std::nullopt,
                              const CashflowOptions& options = {});

/// A^rho given an observed history (any model).
CashFlowTable scaled_cashflow(const AggregateModel& model, const BehaviourSpec& spec,
                              const History& history, double t, const TimeGrid& grid,
                              const PaymentSpec& payments,
                              const std::optional<Exercise>& exercise = std::nullopt,
                              const CashflowOptions& options = {});

/// {J0: [..], J1: [..], rho: [{from, to, value}]}, 1-based macrostates.
BehaviourSpec behaviour_from_json(const nlohmann::json& doc, int macrostates,
                                  const std::string& pointer = "");
nlohmann::json behaviour_to_json(const BehaviourSpec& spec);

}  // namespace aggmark
