#include "aggmark/occprob.hpp"

#include <algorithm>
#include <sstream>

#include "aggmark/error.hpp"

namespace aggmark {

namespace {

Matrix full_pi(const AggregateModel& model, double a, double b, const TimeGrid& grid) {
  const int n = model.dimension();
  if (b <= a) return Matrix::Identity(n, n);
  const auto bps = model.breakpoints();
  return product_integral(model.intensity_function(), a, b, span_grid(grid, a, b, bps));
}

Matrix stay_pi(const AggregateModel& model, double a, double b, const TimeGrid& grid) {
  const int n = model.dimension();
  if (b <= a) return Matrix::Identity(n, n);
  const auto bps = model.breakpoints();
  return product_integral(model.block_diagonal_function(), a, b, span_grid(grid, a, b, bps));
}

SpellState embed(const AggregateModel& model, int macro, double start, const RowVector& g) {
  SpellState st;
  st.macro = macro;
  st.spell_start = start;
  st.gamma = RowVector::Zero(model.dimension());
  st.gamma.segment(model.offset(macro), model.micro_count(macro)) = g;
  return st;
}

}  // namespace

SpellState spell_state(const AggregateModel& model, const History& history, double t,
                       const TimeGrid& grid) {
  const int y = history.last_state();
  const double tn = history.last_time();
  if (t < tn) throw DomainError("conditioning time before the last observed jump");
  RowVector g = alpha(model, history, grid).normalized();
  if (t > tn) {
    const auto bps = model.breakpoints();
    g = g * product_integral(model.diagonal_block_function(y), tn, t,
                             span_grid(grid, tn, t, bps));
  }
  const double mass = g.sum();
  if (!(mass >= kConditioningFloor)) {
    std::ostringstream os;
    os << "survival of the current sojourn to t=" << t << " is " << mass;
    throw ConditioningOnNull(os.str());
  }
  return embed(model, y, tn, g / mass);
}

SpellState spell_state(const AggregateModel& model, int i, double t, double u,
                       const TimeGrid& grid) {
  return embed(model, i, t - u, spell_distribution(model, i, t, u, grid));
}

RowVector tail_row(const AggregateModel& model, const SpellState& st, double t, double s,
                   double z, const TimeGrid& grid) {
  if (s < t) throw DomainError("tail needs s >= t");
  if (z < 0.0) throw DomainError("duration threshold must be nonnegative");
  const double cut = s - z;
  if (st.spell_start >= cut) return RowVector::Zero(model.dimension());
  if (cut <= t) {
    RowVector out = RowVector::Zero(model.dimension());
    const int off = model.offset(st.macro);
    const int d = model.micro_count(st.macro);
    RowVector g = st.gamma.segment(off, d);
    if (s > t) {
      const auto bps = model.breakpoints();
      g = g * product_integral(model.diagonal_block_function(st.macro), t, s,
                               span_grid(grid, t, s, bps));
    }
    out.segment(off, d) = g;
    return out;
  }
  return st.gamma * full_pi(model, t, cut, grid) * stay_pi(model, cut, s, grid);
}

double occupation_tail(const AggregateModel& model, const History& history, double t,
                       double s, double z, int offset, const TimeGrid& grid) {
  if (z >= s - history.last_time()) return 0.0;
  return tail_row(model, spell_state(model, history, t, grid), t, s, z, grid)(offset);
}

double semi_markov_tail(const AggregateModel& model, int i, double u, double t, double s,
                        double z, int offset, const TimeGrid& grid) {
  if (u < 0.0 || u > t || s < t) throw DomainError("semi-Markov tail needs 0 <= u <= t <= s");
  if (z >= u + s - t) return 0.0;
  return tail_row(model, spell_state(model, i, t, u, grid), t, s, z, grid)(offset);
}

double boundary_atom(const AggregateModel& model, int i, double u, double t, double s,
                     int offset, const TimeGrid& grid) {
  if (model.index_of(offset).macro != i) return 0.0;
  const SpellState st = spell_state(model, i, t, u, grid);
  return tail_row(model, st, t, s, s - t, grid)(offset);
}

Matrix tail_matrix(const AggregateModel& model, double u, double t, double s, double z,
                   const TimeGrid& grid) {
  const int J = model.macrostates();
  Matrix out = Matrix::Zero(J, model.dimension());
  if (z >= u + s - t) return out;
  const double cut = s - z;
  if (cut <= t) {
    for (int i = 0; i < J; ++i)
      out.row(i) = tail_row(model, spell_state(model, i, t, u, grid), t, s, z, grid);
    return out;
  }
  const Matrix p = full_pi(model, t, cut, grid) * stay_pi(model, cut, s, grid);
  for (int i = 0; i < J; ++i) out.row(i) = spell_state(model, i, t, u, grid).gamma * p;
  return out;
}

CsvTable tail_surface(const AggregateModel& model, double t, const std::vector<double>& us,
                      const std::vector<double>& ss, const std::vector<double>& zs,
                      const TimeGrid& grid) {
  CsvTable table({"i", "u", "s", "z", "j", "j_micro", "value"});
  for (double u : us)
    for (double s : ss)
      for (double z : zs) {
        const Matrix m = tail_matrix(model, u, t, s, z, grid);
        for (int i = 0; i < model.macrostates(); ++i)
          for (int c = 0; c < model.dimension(); ++c) {
            const MicroIndex mi = model.index_of(c);
            table.add_row({std::to_string(i + 1), format_number(u), format_number(s),
                           format_number(z), std::to_string(mi.macro + 1),
                           std::to_string(mi.micro + 1), format_number(m(i, c))});
          }
      }
  return table;
}

}  // namespace aggmark
