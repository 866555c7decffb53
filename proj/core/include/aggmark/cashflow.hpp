#pragma once

#include <utility>
#include <vector>

#include "aggmark/model.hpp"
#include "aggmark/mpp.hpp"
#include "aggmark/occprob.hpp"
#include "aggmark/payments.hpp"

namespace aggmark {

/// R(t, u) = diag(b(t, u)) + M(t) • B(t, u) at microstate level.
Matrix reward_matrix(const AggregateModel& model, const PaymentSpec& payments, double t,
                     double u);

/// R(t, u) 1 without forming the matrix.
Vector reward_vector(const AggregateModel& model, const PaymentSpec& payments, double t,
                     double u);

struct CashFlowRow {
  int initial_state = 0;        // 0-based macrostate
  double initial_duration = 0;  // duration at the valuation time
  std::vector<double> rate;     // a(t, t_l)
  std::vector<double> rate_before;
  std::vector<double> rate_after;
  std::vector<double> rate_mid;     // a(t, .) at interval midpoints, may be empty
  std::vector<double> accumulated;  // A(t, t_l)
  std::vector<double> discounted;   // int_t^{t_l} e^{-int r} A(t, ds)
  double reserve = 0.0;             // discounted value at the last grid time
};

struct CashFlowTable {
  double valuation_time = 0.0;
  std::vector<double> times;
  std::vector<CashFlowRow> rows;
};

enum class Quadrature {
  trapezoid,
  simpson  // Simpson, with a 3/8 end panel for odd counts; trapezoid on single steps
};

struct CashflowOptions {
  Quadrature quadrature = Quadrature::simpson;
};

/// Conditioning on a spell: macrostate i entered u years before t.
struct SpellCondition {
  int state = 0;
  double duration = 0.0;
};

/// Expected cash flows of a reset model for each (i, u) at valuation time t.
/// Without a reset structure only single-microstate macrostates can be
/// conditioned on (MisuseError otherwise).
/// The output grid is the part of `grid` inside [t, horizon] with t, the
/// horizon and the breakpoints inserted; the grid must reach the horizon.
CashFlowTable expected_cashflow_reset(const AggregateModel& model,
                                      const std::vector<SpellCondition>& conditions,
                                      double t, const TimeGrid& grid,
                                      const PaymentSpec& payments,
                                      const CashflowOptions& options = {});
CashFlowTable expected_cashflow_reset(const AggregateModel& model, int i, double u, double t,
                                      const TimeGrid& grid, const PaymentSpec& payments,
                                      const CashflowOptions& options = {});

/// Expected cash flows given an observed history, any model.
CashFlowTable expected_cashflow_general(const AggregateModel& model, const History& history,
                                        double t, const TimeGrid& grid,
                                        const PaymentSpec& payments,
                                        const CashflowOptions& options = {});

/// Same engine for precomputed spell states (used by the other entry points).
CashFlowTable expected_cashflow_spells(const AggregateModel& model,
                                       const std::vector<SpellState>& spells, double t,
                                       const TimeGrid& grid, const PaymentSpec& payments,
                                       const CashflowOptions& options = {});

/// a(t, s) = gamma P(t, s) R(s) 1 with one forward sweep on the grid. Throws
/// MisuseError if payments depend on duration or are declared to.
CashFlowTable fast_path_cashflow(const AggregateModel& model,
                                 const std::vector<SpellCondition>& conditions, double t,
                                 const TimeGrid& grid, const PaymentSpec& payments);
CashFlowTable fast_path_cashflow(const AggregateModel& model, const History& history,
                                 double t, const TimeGrid& grid, const PaymentSpec& payments);
CashFlowTable fast_path_cashflow_spells(const AggregateModel& model,
                                        const std::vector<SpellState>& spells, double t,
                                        const TimeGrid& grid, const PaymentSpec& payments);

/// Recomputes accumulated, discounted and reserve columns from the rates:
/// Simpson per interval when midpoint rates are present, trapezoid otherwise.
void accumulate(CashFlowTable& table, const ScalarFunction& interest);

/// Reserve per row under `interest` (trapezoid over one-sided rates).
std::vector<double> reserve(const CashFlowTable& table, const ScalarFunction& interest);

/// Output grid used by the valuation routines.
TimeGrid valuation_grid(const TimeGrid& grid, double t, double horizon);

/// valuation_grid with the model and payment breakpoints added, and the
/// times where a conditioned spell reaches a duration breakpoint.
TimeGrid valuation_grid(const AggregateModel& model, const PaymentSpec& payments,
                        const std::vector<SpellState>& spells, const TimeGrid& grid, double t);

}  // namespace aggmark
