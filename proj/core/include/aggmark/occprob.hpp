#pragma once

#include <vector>

#include "aggmark/csv.hpp"
#include "aggmark/model.hpp"
#include "aggmark/mpp.hpp"

namespace aggmark {

/// Conditional microstate law at t for a spell in macrostate `macro` that
/// started at `spell_start`, embedded in a row of length d̄.
struct SpellState {
  int macro = 0;
  double spell_start = 0.0;
  RowVector gamma;
};

/// From a history: gamma = alpha-hat F_{y_n y_n}(t_n, t), normalised.
SpellState spell_state(const AggregateModel& model, const History& history, double t,
                       const TimeGrid& grid);
/// Reset case: gamma_i(t, u) = pi_i(t-u) F_ii(t-u, t), normalised.
SpellState spell_state(const AggregateModel& model, int i, double t, double u,
                       const TimeGrid& grid);

/// P(X(s) = ., U(s) > z | spell) for every microstate, as a row of length d̄.
/// Zero when the spell start is >= s - z; for s - z <= t only the current
/// macrostate can contribute (the spell must last through s).
RowVector tail_row(const AggregateModel& model, const SpellState& state, double t,
                   double s, double z, const TimeGrid& grid);

/// General case p̄_j(t, s, z) given an observed history; `offset` is the flat
/// microstate index.
double occupation_tail(const AggregateModel& model, const History& history, double t,
                       double s, double z, int offset, const TimeGrid& grid);

/// Reset case p̄_{ij}(t, u, s, z).
double semi_markov_tail(const AggregateModel& model, int i, double u, double t, double s,
                        double z, int offset, const TimeGrid& grid);

/// Jump of z -> p̄_{ij}(t, u, s, z) at z = u + s - t (the plateau value for
/// microstates of i, zero elsewhere).
double boundary_atom(const AggregateModel& model, int i, double u, double t, double s,
                     int offset, const TimeGrid& grid);

/// J x d̄ matrix whose row i is p̄_{i.}(t, u, s, z).
Matrix tail_matrix(const AggregateModel& model, double u, double t, double s, double z,
                   const TimeGrid& grid);

/// Probability surface dump with columns (i, u, s, z, j, j_micro, value).
CsvTable tail_surface(const AggregateModel& model, double t, const std::vector<double>& us,
                      const std::vector<double>& ss, const std::vector<double>& zs,
                      const TimeGrid& grid);

}  // namespace aggmark
