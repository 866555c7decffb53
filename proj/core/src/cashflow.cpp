#include "aggmark/cashflow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <tuple>

#include "aggmark/error.hpp"
#include "aggmark/parallel.hpp"

namespace aggmark {

Matrix reward_matrix(const AggregateModel& model, const PaymentSpec& payments, double t,
                     double u) {
  const int n = model.dimension();
  const int J = model.macrostates();
  Matrix r = Matrix::Zero(n, n);
  const Matrix m = model.intensity(t);
  for (int j = 0; j < J; ++j) {
    const int oj = model.offset(j);
    const int dj = model.micro_count(j);
    const double b = payments.sojourn_rate(j, t, u);
    for (int a = 0; a < dj; ++a) r(oj + a, oj + a) = b;
    for (int k = 0; k < J; ++k) {
      if (k == j) continue;
      const double bjk = payments.transition_payment(j, k, t, u);
      if (bjk == 0.0) continue;
      r.block(oj, model.offset(k), dj, model.micro_count(k)) =
          bjk * m.block(oj, model.offset(k), dj, model.micro_count(k));
    }
  }
  return r;
}

Vector reward_vector(const AggregateModel& model, const PaymentSpec& payments, double t,
                     double u) {
  const int J = model.macrostates();
  Vector r = Vector::Zero(model.dimension());
  if (t > payments.horizon) return r;
  Matrix m;
  bool have_m = false;
  for (int j = 0; j < J; ++j) {
    const int oj = model.offset(j);
    const int dj = model.micro_count(j);
    r.segment(oj, dj).array() += payments.sojourn_rate(j, t, u);
    for (int k = 0; k < J; ++k) {
      if (k == j) continue;
      const double bjk = payments.transition_payment(j, k, t, u);
      if (bjk == 0.0) continue;
      if (!have_m) {
        m = model.intensity(t);
        have_m = true;
      }
      r.segment(oj, dj) +=
          bjk * m.block(oj, model.offset(k), dj, model.micro_count(k)).rowwise().sum();
    }
  }
  return r;
}

TimeGrid valuation_grid(const TimeGrid& grid, double t, double horizon) {
  const double tol = 1e-12 * std::max(1.0, std::abs(horizon));
  if (!(t < horizon)) throw DomainError("valuation time must lie before the horizon");
  if (t < grid.front() - tol || grid.back() < horizon - tol) {
    std::ostringstream os;
    os << "grid [" << grid.front() << ", " << grid.back() << "] does not span ["
       << t << ", " << horizon << "]";
    throw DomainError(os.str());
  }
  return grid.restricted(t, horizon);
}

TimeGrid valuation_grid(const AggregateModel& model, const PaymentSpec& payments,
                        const std::vector<SpellState>& spells, const TimeGrid& grid, double t) {
  const TimeGrid w = valuation_grid(grid, t, payments.horizon);
  std::vector<double> extra;
  auto keep = [&](double x) {
    if (x > t && x < payments.horizon) extra.push_back(x);
  };
  for (double x : model.breakpoints()) keep(x);
  for (double x : payments.time_breakpoints()) keep(x);
  const auto zb = payments.duration_breakpoints();
  for (const auto& sp : spells)
    for (double z : zb) keep(sp.spell_start + z);
  if (extra.empty()) return w;
  return w.with_points(extra);
}

void accumulate(CashFlowTable& table, const ScalarFunction& interest) {
  const auto& ts = table.times;
  const double t0 = table.valuation_time;
  std::vector<double> disc(ts.size());
  for (std::size_t l = 0; l < ts.size(); ++l)
    disc[l] = ts[l] == t0 ? 1.0 : std::exp(-interest.integral(t0, ts[l]));
  std::vector<double> disc_mid(ts.empty() ? 0 : ts.size() - 1);
  for (std::size_t l = 0; l < disc_mid.size(); ++l)
    disc_mid[l] = std::exp(-interest.integral(t0, 0.5 * (ts[l] + ts[l + 1])));
  for (auto& row : table.rows) {
    row.accumulated.assign(ts.size(), 0.0);
    row.discounted.assign(ts.size(), 0.0);
    const bool mid = !ts.empty() && row.rate_mid.size() == ts.size() - 1;
    for (std::size_t l = 0; l + 1 < ts.size(); ++l) {
      const double h = ts[l + 1] - ts[l];
      const double a0 = row.rate_after[l];
      const double a1 = row.rate_before[l + 1];
      if (mid) {
        const double am = row.rate_mid[l];
        row.accumulated[l + 1] = row.accumulated[l] + h / 6.0 * (a0 + 4.0 * am + a1);
        row.discounted[l + 1] =
            row.discounted[l] +
            h / 6.0 * (disc[l] * a0 + 4.0 * disc_mid[l] * am + disc[l + 1] * a1);
      } else {
        row.accumulated[l + 1] = row.accumulated[l] + 0.5 * h * (a0 + a1);
        row.discounted[l + 1] = row.discounted[l] + 0.5 * h * (disc[l] * a0 + disc[l + 1] * a1);
      }
    }
    row.reserve = row.discounted.empty() ? 0.0 : row.discounted.back();
  }
}

std::vector<double> reserve(const CashFlowTable& table, const ScalarFunction& interest) {
  CashFlowTable copy = table;
  accumulate(copy, interest);
  std::vector<double> out;
  for (const auto& r : copy.rows) out.push_back(r.reserve);
  return out;
}

namespace {

// Payment terms sharing one duration factor phi(z); c_g(s) collects their
// time parts as a d̄-vector.
struct Group {
  ScalarFunction phi;
  std::vector<std::pair<int, ScalarFunction>> sojourn;
  std::vector<std::tuple<int, int, ScalarFunction>> transition;
};

std::vector<Group> payment_groups(const PaymentSpec& p) {
  std::vector<Group> groups;
  auto find = [&](const ScalarFunction& phi) -> Group& {
    for (auto& g : groups)
      if (g.phi == phi) return g;
    groups.push_back({phi, {}, {}});
    return groups.back();
  };
  const int J = p.macrostates();
  for (int j = 0; j < J; ++j) {
    for (const auto& t : p.sojourn[j].terms()) find(t.duration).sojourn.emplace_back(j, t.time);
    for (int k = 0; k < J; ++k) {
      if (k == j) continue;
      for (const auto& t : p.transition[j][k].terms())
        find(t.duration).transition.emplace_back(j, k, t.time);
    }
  }
  return groups;
}

Matrix group_columns(const AggregateModel& model, const PaymentSpec& p,
                     const std::vector<Group>& groups, double s) {
  Matrix c = Matrix::Zero(model.dimension(), static_cast<Eigen::Index>(groups.size()));
  if (s > p.horizon || groups.empty()) return c;
  const Matrix m = model.intensity(s);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const auto& [j, f] : groups[g].sojourn)
      c.col(g).segment(model.offset(j), model.micro_count(j)).array() += f(s);
    for (const auto& [j, k, f] : groups[g].transition) {
      const double v = f(s);
      if (v == 0.0) continue;
      c.col(g).segment(model.offset(j), model.micro_count(j)) +=
          v * m.block(model.offset(j), model.offset(k), model.micro_count(j),
                      model.micro_count(k))
                  .rowwise()
                  .sum();
    }
  }
  return c;
}

struct FineNodes {
  std::vector<double> x;  // K*S + 1 nodes
  std::vector<double> h;  // K*S steps
  int substeps = 1;
  int intervals = 0;
};

FineNodes fine_nodes(const TimeGrid& w) {
  FineNodes f;
  f.substeps = w.substeps();
  f.intervals = static_cast<int>(w.size()) - 1;
  for (int k = 0; k < f.intervals; ++k) {
    const double a = w[k];
    const double b = w[k + 1];
    const double hk = (b - a) / f.substeps;
    for (int i = 0; i < f.substeps; ++i) {
      f.x.push_back(a + i * hk);
      const double next = i + 1 == f.substeps ? b : a + (i + 1) * hk;
      f.h.push_back(next - (a + i * hk));
    }
  }
  f.x.push_back(w.back());
  return f;
}

CashFlowTable make_table(const std::vector<SpellState>& spells, double t, const TimeGrid& w) {
  CashFlowTable table;
  table.valuation_time = t;
  table.times.assign(w.points().begin(), w.points().end());
  for (const auto& sp : spells) {
    CashFlowRow row;
    row.initial_state = sp.macro;
    row.initial_duration = t - sp.spell_start;
    row.rate.assign(w.size(), 0.0);
    row.rate_before.assign(w.size(), 0.0);
    row.rate_after.assign(w.size(), 0.0);
    table.rows.push_back(std::move(row));
  }
  return table;
}

void check_inputs(const AggregateModel& model, const PaymentSpec& payments) {
  payments.check(model.macrostates());
}

}  // namespace

CashFlowTable expected_cashflow_spells(const AggregateModel& model,
                                       const std::vector<SpellState>& spells, double t,
                                       const TimeGrid& grid, const PaymentSpec& payments,
                                       const CashflowOptions& options) {
  check_inputs(model, payments);
  const TimeGrid w = valuation_grid(model, payments, spells, grid, t);
  CashFlowTable table = make_table(spells, t, w);
  const int R = static_cast<int>(spells.size());
  if (R == 0 || payments.is_zero()) {
    accumulate(table, payments.interest);
    return table;
  }
  const int n = model.dimension();
  const int J = model.macrostates();
  const FineNodes f = fine_nodes(w);
  const int S = f.substeps;
  const int steps = static_cast<int>(f.h.size());
  const bool simpson = options.quadrature == Quadrature::simpson;

  // intensities at the stage points of every fine step
  std::vector<std::array<Matrix, 3>> cache(steps);
  parallel_for(static_cast<std::size_t>(steps), [&](std::size_t m) {
    const int i = static_cast<int>(m) % S;
    const double eps = rk4::endpoint_nudge(f.h[m]);
    const double a = f.x[m];
    const double b = f.x[m + 1];
    cache[m][0] = model.intensity(i == 0 ? a + eps : a);
    cache[m][1] = model.intensity(a + 0.5 * f.h[m]);
    cache[m][2] = model.intensity(i + 1 == S ? b - eps : b);
  });
  auto jumps_only = [&](const Matrix& m) {
    Matrix out = m;
    for (int j = 0; j < J; ++j)
      out.block(model.offset(j), model.offset(j), model.micro_count(j), model.micro_count(j))
          .setZero();
    return out;
  };

  // forward: gamma P(t, x_m) and the jump densities on either side of each node
  Matrix gamma(R, n);
  for (int r = 0; r < R; ++r) gamma.row(r) = spells[r].gamma;
  std::vector<Matrix> g_left(steps + 1), g_right(steps + 1);
  {
    Matrix y = gamma;
    rk4::Workspace ws;
    for (int m = 0; m <= steps; ++m) {
      if (m > 0) g_right[m] = y * jumps_only(cache[m - 1][2]);
      if (m < steps) {
        g_left[m] = y * jumps_only(cache[m][0]);
        rk4::forward_step(y, cache[m][0], cache[m][1], cache[m][2], f.h[m], ws);
        rk4::check_finite(y, f.x[m + 1]);
      }
    }
  }

  // diagonal blocks of the cached intensities
  std::vector<std::vector<std::array<Matrix, 3>>> blocks(J, std::vector<std::array<Matrix, 3>>(steps));
  for (int j = 0; j < J; ++j) {
    const int o = model.offset(j);
    const int d = model.micro_count(j);
    for (int m = 0; m < steps; ++m)
      for (int q = 0; q < 3; ++q) blocks[j][m][q] = cache[m][q].block(o, o, d, d);
  }

  const auto groups = payment_groups(payments);
  const int G = static_cast<int>(groups.size());
  std::vector<double> durations(R);
  for (int r = 0; r < R; ++r) durations[r] = t - spells[r].spell_start;

  // Quadrature weights for a sweep ending at fine node e. Each grid interval
  // (or the part of it before e) is one panel; at panel joins the left and
  // right values take their own panel's weight, inside a panel they share it.
  auto node_weight = [&](int m, int ps, int pe) {
    const int n = pe - ps;
    const int i = m - ps;
    const double h = f.h[std::min(m, pe - 1)];
    if (simpson && n >= 2) {
      // odd counts end with a 3/8 panel
      const int k = n % 2 == 0 ? n : n - 3;
      double wt = 0.0;
      if (i <= k && k > 0) wt += (i == 0 || i == k) ? h / 3.0 : (i % 2 ? 4.0 : 2.0) / 3.0 * h;
      if (k < n && i >= k) wt += (i == k || i == n) ? 3.0 * h / 8.0 : 9.0 * h / 8.0;
      return wt;
    }
    return (i == 0 || i == n) ? 0.5 * h : h;
  };
  auto weight_left = [&](int m, int e) {
    const int ps = (m / S) * S;
    const int pe = std::min(ps + S, e);
    return node_weight(m, ps, pe) * (m == ps ? 1.0 : 0.5);
  };
  auto weight_right = [&](int m, int e) {
    const int ps = ((m - 1) / S) * S;
    const int pe = std::min(ps + S, e);
    return node_weight(m, ps, pe) * (m == pe ? 1.0 : 0.5);
  };

  const int L = static_cast<int>(w.size());
  const bool midpoints = S % 2 == 0;
  if (midpoints)
    for (auto& row : table.rows) row.rate_mid.assign(L - 1, 0.0);
  // outputs: grid points, then interval midpoints
  const int tasks = midpoints ? 2 * L - 1 : L;
  parallel_for(static_cast<std::size_t>(tasks), [&](std::size_t task) {
    const int q = static_cast<int>(task);
    const bool is_mid = q >= L;
    // longest sweeps first within each kind
    const int l = is_mid ? (2 * L - 2 - q) : (L - 1 - q);
    const int ml = is_mid ? l * S + S / 2 : l * S;
    const double s = f.x[ml];
    const double hs = ml > 0 ? f.h[ml - 1] : f.h[0];
    const double ds = rk4::endpoint_nudge(hs);
    // columns [before | at | after]
    Matrix c(n, 3 * G);
    c.middleCols(0, G) = group_columns(model, payments, groups, s - ds);
    c.middleCols(G, G) = group_columns(model, payments, groups, s);
    c.middleCols(2 * G, G) = group_columns(model, payments, groups, s + ds);
    std::vector<Matrix> y(J);
    for (int j = 0; j < J; ++j) y[j] = c.middleRows(model.offset(j), model.micro_count(j));
    Matrix integral = Matrix::Zero(R, 3);
    Matrix py(n, 3 * G);
    std::vector<rk4::Workspace> ws(J);
    std::vector<double> phi_l(G), phi_r(G);
    for (int m = ml; m >= 0; --m) {
      for (int j = 0; j < J; ++j) py.middleRows(model.offset(j), model.micro_count(j)) = y[j];
      const double z = s - f.x[m];
      if (m < ml) {
        const double e = rk4::endpoint_nudge(f.h[m]);
        for (int g = 0; g < G; ++g) phi_l[g] = groups[g].phi(z - e);
        const Matrix v = g_left[m] * py;
        const double wgt = weight_left(m, ml);
        for (int r = 0; r < R; ++r)
          for (int side = 0; side < 3; ++side) {
            double acc = 0.0;
            for (int g = 0; g < G; ++g) acc += phi_l[g] * v(r, side * G + g);
            integral(r, side) += wgt * acc;
          }
      }
      if (m > 0) {
        const double e = rk4::endpoint_nudge(f.h[m - 1]);
        for (int g = 0; g < G; ++g) phi_r[g] = groups[g].phi(z + e);
        const Matrix v = g_right[m] * py;
        const double wgt = weight_right(m, ml);
        for (int r = 0; r < R; ++r)
          for (int side = 0; side < 3; ++side) {
            double acc = 0.0;
            for (int g = 0; g < G; ++g) acc += phi_r[g] * v(r, side * G + g);
            integral(r, side) += wgt * acc;
          }
        for (int j = 0; j < J; ++j) {
          rk4::backward_step(y[j], blocks[j][m - 1][2], blocks[j][m - 1][1],
                             blocks[j][m - 1][0], f.h[m - 1], ws[j]);
          rk4::check_finite(y[j], f.x[m - 1]);
        }
      }
    }
    // no jump in (t, s]: stay in the current spell to s
    const Matrix atom = gamma * py;
    for (int r = 0; r < R; ++r) {
      const double zr = durations[r] + s - t;
      const double shifts[3] = {-ds, 0.0, ds};
      double vals[3];
      for (int side = 0; side < 3; ++side) {
        double acc = 0.0;
        for (int g = 0; g < G; ++g)
          acc += groups[g].phi(zr + shifts[side]) * atom(r, side * G + g);
        vals[side] = integral(r, side) + acc;
      }
      auto& row = table.rows[r];
      if (is_mid) {
        row.rate_mid[l] = vals[1];
        continue;
      }
      row.rate_before[l] = l == 0 ? vals[1] : vals[0];
      row.rate[l] = vals[1];
      row.rate_after[l] = vals[2];
    }
  });
  accumulate(table, payments.interest);
  return table;
}

CashFlowTable expected_cashflow_reset(const AggregateModel& model,
                                      const std::vector<SpellCondition>& conditions,
                                      double t, const TimeGrid& grid,
                                      const PaymentSpec& payments,
                                      const CashflowOptions& options) {
  std::vector<SpellState> spells;
  for (const auto& c : conditions)
    spells.push_back(spell_state(model, c.state, t, c.duration, grid));
  return expected_cashflow_spells(model, spells, t, grid, payments, options);
}

CashFlowTable expected_cashflow_reset(const AggregateModel& model, int i, double u, double t,
                                      const TimeGrid& grid, const PaymentSpec& payments,
                                      const CashflowOptions& options) {
  return expected_cashflow_reset(model, std::vector<SpellCondition>{{i, u}}, t, grid,
                                 payments, options);
}

CashFlowTable expected_cashflow_general(const AggregateModel& model, const History& history,
                                        double t, const TimeGrid& grid,
                                        const PaymentSpec& payments,
                                        const CashflowOptions& options) {
  return expected_cashflow_spells(model, {spell_state(model, history, t, grid)}, t, grid,
                                  payments, options);
}

CashFlowTable fast_path_cashflow_spells(const AggregateModel& model,
                                        const std::vector<SpellState>& spells, double t,
                                        const TimeGrid& grid, const PaymentSpec& payments) {
  check_inputs(model, payments);
  if (!payments.duration_independent() ||
      (payments.declared_duration_independent && !*payments.declared_duration_independent))
    throw MisuseError("fast path needs duration-independent payments");
  const TimeGrid w = valuation_grid(model, payments, spells, grid, t);
  CashFlowTable table = make_table(spells, t, w);
  const int R = static_cast<int>(spells.size());
  if (R == 0 || payments.is_zero()) {
    accumulate(table, payments.interest);
    return table;
  }
  const int n = model.dimension();
  Matrix y(R, n);
  for (int r = 0; r < R; ++r) y.row(r) = spells[r].gamma;
  const int S = w.substeps();
  const bool midpoints = S % 2 == 0;
  if (midpoints)
    for (auto& row : table.rows) row.rate_mid.assign(w.size() - 1, 0.0);
  rk4::Workspace ws;
  auto record = [&](std::size_t l) {
    const double s = w[l];
    const double hs = l > 0 ? (w[l] - w[l - 1]) / S : (w[1] - w[0]) / S;
    const double ds = rk4::endpoint_nudge(hs);
    const Vector before = reward_vector(model, payments, s - ds, 0.0);
    const Vector at = reward_vector(model, payments, s, 0.0);
    const Vector after = reward_vector(model, payments, s + ds, 0.0);
    const Vector vb = y * before, va = y * at, vf = y * after;
    for (int r = 0; r < R; ++r) {
      table.rows[r].rate_before[l] = l == 0 ? va[r] : vb[r];
      table.rows[r].rate[l] = va[r];
      table.rows[r].rate_after[l] = vf[r];
    }
  };
  record(0);
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double a = w[l];
    const double b = w[l + 1];
    const double h = (b - a) / S;
    const double eps = rk4::endpoint_nudge(h);
    Matrix m0 = model.intensity(a + eps);
    for (int i = 0; i < S; ++i) {
      const double x = a + i * h;
      const double x1 = i + 1 == S ? b : a + (i + 1) * h;
      const Matrix mid = model.intensity(x + 0.5 * h);
      Matrix m1 = model.intensity(i + 1 == S ? b - eps : x1);
      rk4::forward_step(y, m0, mid, m1, x1 - x, ws);
      rk4::check_finite(y, x1);
      m0 = std::move(m1);
      if (midpoints && i + 1 == S / 2) {
        const Vector v = y * reward_vector(model, payments, x1, 0.0);
        for (int r = 0; r < R; ++r) table.rows[r].rate_mid[l] = v[r];
      }
    }
    record(l + 1);
  }
  accumulate(table, payments.interest);
  return table;
}

CashFlowTable fast_path_cashflow(const AggregateModel& model,
                                 const std::vector<SpellCondition>& conditions, double t,
                                 const TimeGrid& grid, const PaymentSpec& payments) {
  std::vector<SpellState> spells;
  for (const auto& c : conditions)
    spells.push_back(spell_state(model, c.state, t, c.duration, grid));
  return fast_path_cashflow_spells(model, spells, t, grid, payments);
}

CashFlowTable fast_path_cashflow(const AggregateModel& model, const History& history,
                                 double t, const TimeGrid& grid, const PaymentSpec& payments) {
  return fast_path_cashflow_spells(model, {spell_state(model, history, t, grid)}, t, grid,
                                   payments);
}

}  // namespace aggmark
