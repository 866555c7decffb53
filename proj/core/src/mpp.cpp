#include "aggmark/mpp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aggmark/error.hpp"

namespace aggmark {

History::History() : times_{0.0}, states_{0} {}

History::History(std::vector<std::pair<double, int>> jumps) : History() {
  for (const auto& [t, y] : jumps) {
    if (!(t > times_.back())) throw DomainError("history jump times must increase");
    if (y == states_.back()) throw DomainError("consecutive history states must differ");
    if (y < 0) throw DomainError("history state must be nonnegative");
    times_.push_back(t);
    states_.push_back(y);
  }
}

History History::from_path(const SimPath& path, double up_to) {
  const auto ev = path.macro_events();
  if (ev.empty() || ev.front().time != 0.0 || ev.front().macro != 0)
    throw DomainError("history needs a path started at time 0 in the first macrostate");
  std::vector<std::pair<double, int>> jumps;
  for (std::size_t i = 1; i < ev.size() && ev[i].time <= up_to; ++i)
    jumps.emplace_back(ev[i].time, ev[i].macro);
  return History(std::move(jumps));
}

History History::extended(double t, int state) const {
  std::vector<std::pair<double, int>> jumps;
  for (std::size_t i = 1; i < times_.size(); ++i) jumps.emplace_back(times_[i], states_[i]);
  jumps.emplace_back(t, state);
  return History(std::move(jumps));
}

namespace {

void check_states(const AggregateModel& model, const History& h) {
  for (int y : h.states())
    if (y >= model.macrostates()) throw DomainError("history state outside the model");
}

Matrix stay(const AggregateModel& model, int j, double a, double b, const TimeGrid& grid) {
  const int d = model.micro_count(j);
  if (b <= a) return Matrix::Identity(d, d);
  const auto bps = model.breakpoints();
  const TimeGrid local = span_grid(grid, a, b, bps);
  return product_integral(model.diagonal_block_function(j), a, b, local);
}

// alpha-hat F_{yy}(t_n, t): unnormalised current microstate weights.
RowVector current_weights(const AggregateModel& model, const History& h, double t,
                          const TimeGrid& grid) {
  if (t < h.last_time()) throw DomainError("time lies before the last observed jump");
  const RowVector a = alpha(model, h, grid).normalized();
  return a * stay(model, h.last_state(), h.last_time(), t, grid);
}

}  // namespace

AlphaVector alpha(const AggregateModel& model, const History& history,
                  const TimeGrid& grid) {
  check_states(model, history);
  AlphaVector a{model.initial(), 0.0};
  const auto& ts = history.times();
  const auto& ys = history.states();
  for (std::size_t l = 0; l + 1 < ts.size(); ++l) {
    const RowVector moved = a.values * stay(model, ys[l], ts[l], ts[l + 1], grid);
    a.values = moved * model.block(ys[l], ys[l + 1], ts[l + 1]);
    const double mass = a.values.sum();
    if (!(mass > 0.0)) {
      std::ostringstream os;
      os << "history has zero likelihood at jump " << l + 1 << " (t=" << ts[l + 1]
         << ", " << ys[l] + 1 << " -> " << ys[l + 1] + 1 << ")";
      throw ImpossibleHistory(os.str());
    }
    if (mass < kAlphaRescaleFloor) {
      a.values /= mass;
      a.log_scale += std::log(mass);
    }
  }
  if (!(a.values.sum() > 0.0)) throw ImpossibleHistory("initial distribution has no mass");
  return a;
}

double sojourn_survival(const AggregateModel& model, const History& history, double t,
                        const TimeGrid& grid) {
  return current_weights(model, history, t, grid).sum();
}

Vector mark_distribution(const AggregateModel& model, const History& history, double t,
                         const TimeGrid& grid) {
  const RowVector w = current_weights(model, history, t, grid);
  const int y = history.last_state();
  const Matrix m = model.intensity(t);
  const int J = model.macrostates();
  Vector out = Vector::Zero(J);
  for (int k = 0; k < J; ++k) {
    if (k == y) continue;
    out[k] = (w * m.block(model.offset(y), model.offset(k), model.micro_count(y),
                          model.micro_count(k)))
                 .sum();
  }
  const double total = out.sum();
  if (!(total > 0.0)) {
    std::ostringstream os;
    os << "no jump possible out of macrostate " << y + 1 << " at t=" << t;
    throw NoJumpPossible(os.str());
  }
  return out / total;
}

double compensator_intensity(const AggregateModel& model, const History& history, int j,
                             int k, double t, const TimeGrid& grid) {
  if (j == k) throw DomainError("compensator needs j != k");
  if (j != history.last_state()) return 0.0;
  const RowVector w = current_weights(model, history, t, grid);
  const double mass = w.sum();
  if (!(mass >= kConditioningFloor)) {
    std::ostringstream os;
    os << "survival of the current sojourn at t=" << t << " is " << mass;
    throw ConditioningOnNull(os.str());
  }
  const Matrix blk = model.block(j, k, t);
  return (w * blk).sum() / mass;
}

IphRepresentation sojourn_representation(const AggregateModel& model,
                                         const History& history, const TimeGrid& grid) {
  const RowVector a = alpha(model, history, grid).normalized();
  const MatrixFunction base = model.diagonal_block_function(history.last_state());
  const double tn = history.last_time();
  return IphRepresentation{
      a, MatrixFunction(base.dimension(), [base, tn](double x) { return base(tn + x); })};
}

std::vector<double> cumulative_compensator(const AggregateModel& model, const SimPath& path,
                                           int j, int k, std::span<const double> checkpoints,
                                           double step) {
  if (!(step > 0.0)) throw DomainError("compensator step must be positive");
  std::vector<double> out(checkpoints.size(), 0.0);
  if (checkpoints.empty()) return out;
  const double last = *std::max_element(checkpoints.begin(), checkpoints.end());
  const auto ev = path.macro_events();
  if (ev.front().time != 0.0) throw DomainError("compensator path must start at time 0");
  const auto bps = model.breakpoints();

  RowVector v = model.initial();
  double lam = 0.0;
  auto record = [&](double t) {
    for (std::size_t c = 0; c < checkpoints.size(); ++c)
      if (checkpoints[c] == t) out[c] = lam;
  };
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const int y = ev[i].macro;
    const double a = ev[i].time;
    const double b = i + 1 < ev.size() ? ev[i + 1].time : INFINITY;
    const double end = std::min(b, last);
    const int off = model.offset(y);
    const int d = model.micro_count(y);
    if (end > a) {
      std::vector<double> cuts{a, end};
      for (double c : checkpoints)
        if (c > a && c < end) cuts.push_back(c);
      for (double x : bps)
        if (x > a && x < end) cuts.push_back(x);
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      const bool counting = y == j;
      auto rhs = [&](double s, const RowVector& x, RowVector& dx, double& dl) {
        const Matrix m = model.intensity(s);
        dx.noalias() = x * m.block(off, off, d, d);
        dl = 0.0;
        if (counting) {
          const double mass = x.sum();
          if (mass > 0.0)
            dl = (x * m.block(off, model.offset(k), d, model.micro_count(k))).sum() / mass;
        }
      };
      RowVector k1(d), k2(d), k3(d), k4(d);
      double l1, l2, l3, l4;
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double pa = cuts[c];
        const double pb = cuts[c + 1];
        const int n = std::max(1, static_cast<int>(std::ceil((pb - pa) / step - 1e-9)));
        const double h = (pb - pa) / n;
        const double eps = rk4::endpoint_nudge(h);
        for (int s = 0; s < n; ++s) {
          const double x0 = pa + s * h;
          rhs(x0 + eps, v, k1, l1);
          rhs(x0 + 0.5 * h, v + 0.5 * h * k1, k2, l2);
          rhs(x0 + 0.5 * h, v + 0.5 * h * k2, k3, l3);
          rhs(x0 + h - eps, v + h * k3, k4, l4);
          v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
          lam += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        }
        const double mass = v.sum();
        if (mass > 0.0 && mass < 1e-200) v /= mass;
        record(pb);
      }
    }
    if (i + 1 >= ev.size() || b > last) break;
    const int y1 = ev[i + 1].macro;
    v = v * model.block(y, y1, b);
    const double mass = v.sum();
    if (!(mass > 0.0)) throw ImpossibleHistory("simulated jump has zero intensity");
    v /= mass;
  }
  // checkpoints at or before time 0, or where the spell ends exactly on them
  for (std::size_t c = 0; c < checkpoints.size(); ++c)
    if (checkpoints[c] <= 0.0) out[c] = 0.0;
  return out;
}

Functional martingale_residual_functional(const AggregateModel& model, int j, int k,
                                          std::vector<double> checkpoints, double step) {
  return [model, j, k, checkpoints = std::move(checkpoints), step](const SimPath& p,
                                                                   std::span<double> out) {
    const auto comp = cumulative_compensator(model, p, j, k, checkpoints, step);
    const auto ev = p.macro_events();
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      double n = 0.0;
      for (std::size_t i = 1; i < ev.size(); ++i)
        if (ev[i].time <= checkpoints[c] && ev[i - 1].macro == j && ev[i].macro == k)
          n += 1.0;
      out[c] = n - comp[c];
    }
  };
}

SmallHCheck small_h_identity_check(const AggregateModel& model, const History& history,
                                   int k, int micro, double t, double h,
                                   const TimeGrid& grid, std::size_t n_paths,
                                   std::uint64_t seed) {
  if (!(h > 0.0)) throw DomainError("h must be positive");
  const int y = history.last_state();
  if (k == y) throw DomainError("target macrostate must differ from the current one");
  const double tn = history.last_time();
  const RowVector w = current_weights(model, history, t, grid);
  const Matrix blk = model.block(y, k, t);
  SmallHCheck out;
  out.rhs = (w * blk)(micro)*h;
  if (n_paths == 0) return out;
  Simulator sim(model, tn, t + h);
  Conditioning c;
  c.start_time = tn;
  c.macro = y;
  c.micro_dist = alpha(model, history, grid).normalized();
  c.observe_time = tn;
  const int target = model.offset(k) + micro;
  const Estimate e = sim.estimate(
      c, 1,
      [tn, t, h, target](const SimPath& p, std::span<double> o) {
        const auto idx = p.first_macro_jump_after(tn);
        o[0] = 0.0;
        if (idx < 0) return;
        const auto& ev = p.events[idx];
        if (ev.time > t && ev.time <= t + h && ev.offset == target) o[0] = 1.0;
      },
      n_paths, seed);
  out.lhs = e.mean[0];
  out.lhs_std_error = e.std_error[0];
  return out;
}

}  // namespace aggmark
