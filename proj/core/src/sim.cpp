#include "aggmark/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "aggmark/error.hpp"
#include "aggmark/parallel.hpp"

namespace aggmark {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t path_seed(std::uint64_t master, std::uint64_t path_id) {
  return splitmix64(master ^ splitmix64(path_id + 0x632be59bd9b4e019ULL));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

int Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw DomainError("categorical draw needs positive total weight");
  const double target = uniform() * total;
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = static_cast<int>(i);
    if (target < acc) return last;
  }
  return last;
}

std::vector<SimEvent> SimPath::macro_events() const {
  std::vector<SimEvent> out;
  for (const auto& e : events)
    if (out.empty() || e.macro != out.back().macro) out.push_back(e);
  return out;
}

const SimEvent& SimPath::state_at(double t) const {
  auto it = std::upper_bound(events.begin(), events.end(), t,
                             [](double v, const SimEvent& e) { return v < e.time; });
  if (it == events.begin()) return events.front();
  return *(it - 1);
}

double SimPath::spell_start(double t) const {
  auto it = std::upper_bound(events.begin(), events.end(), t,
                             [](double v, const SimEvent& e) { return v < e.time; });
  std::size_t i = it == events.begin() ? 0 : static_cast<std::size_t>(it - events.begin()) - 1;
  while (i > 0 && events[i - 1].macro == events[i].macro) --i;
  return events[i].time;
}

std::ptrdiff_t SimPath::first_macro_jump_after(double after) const {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].time > after && events[i].macro != events[i - 1].macro)
      return static_cast<std::ptrdiff_t>(i);
  return -1;
}

Conditioning Conditioning::spell(const AggregateModel& model, int i, double t, double u) {
  if (u < 0.0 || u > t) throw DomainError("conditioning needs 0 <= u <= t");
  Conditioning c;
  c.start_time = t - u;
  c.macro = i;
  c.micro_dist = model.entry_distribution(i, t - u);
  c.observe_time = t;
  return c;
}

Simulator::Simulator(AggregateModel model, double t0, double horizon, SimOptions options)
    : model_(std::move(model)), t0_(t0), horizon_(horizon), options_(options) {
  if (!(horizon_ > t0_)) throw DomainError("simulation horizon must exceed its start");
  if (!(options_.bound_width > 0.0) || !(options_.safety >= 1.0))
    throw DomainError("invalid thinning options");
  const int n = static_cast<int>(std::ceil((horizon_ - t0_) / options_.bound_width - 1e-9));
  for (int i = 0; i <= n; ++i)
    edges_.push_back(std::min(horizon_, t0_ + i * options_.bound_width));
  edges_.back() = horizon_;
  const auto bps = model_.breakpoints();
  const int d = model_.dimension();
  bounds_.assign(edges_.size() - 1, std::vector<double>(d, 0.0));
  for (std::size_t k = 0; k + 1 < edges_.size(); ++k) {
    const double a = edges_[k];
    const double b = edges_[k + 1];
    const double eps = 1e-9 * (b - a);
    std::vector<double> pts;
    for (int i = 0; i <= 8; ++i) pts.push_back(a + (b - a) * i / 8.0);
    pts.front() = a + eps;
    pts.back() = b - eps;
    pts.push_back(a);
    for (double x : bps)
      if (x > a && x < b) {
        pts.push_back(x - eps);
        pts.push_back(x);
        pts.push_back(x + eps);
      }
    for (double x : pts) {
      const Matrix m = model_.intensity(x);
      for (int r = 0; r < d; ++r) {
        double q = 0.0;
        for (int c = 0; c < d; ++c)
          if (c != r) q += m(r, c);
        bounds_[k][r] = std::max(bounds_[k][r], q);
      }
    }
    for (auto& v : bounds_[k]) v *= options_.safety;
  }
}

double Simulator::bound(int offset, double t) const {
  auto it = std::upper_bound(edges_.begin(), edges_.end(), t);
  std::size_t k = it == edges_.begin() ? 0 : static_cast<std::size_t>(it - edges_.begin()) - 1;
  k = std::min(k, bounds_.size() - 1);
  return bounds_[k].at(offset);
}

bool Simulator::simulate(SimPath& path, Rng& rng, double stop_if_leaves_before) const {
  const int d = model_.dimension();
  double tau = path.start_time;
  int x = path.events.back().offset;
  std::vector<double> w(d);
  while (tau < horizon_) {
    auto it = std::upper_bound(edges_.begin(), edges_.end(), tau);
    const std::size_t k = static_cast<std::size_t>(it - edges_.begin()) - 1;
    const double b = edges_[k + 1];
    const double lam = bounds_[k][x];
    if (lam <= 0.0) {
      tau = b;
      continue;
    }
    const double cand = tau + rng.exponential(lam);
    if (cand >= b) {
      tau = b;
      continue;
    }
    const Matrix m = model_.intensity(cand);
    double q = 0.0;
    for (int c = 0; c < d; ++c) {
      w[c] = c == x ? 0.0 : m(x, c);
      q += w[c];
    }
    if (q > lam * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "sim: exit rate " << q << " of microstate " << x + 1 << " exceeds bound "
         << lam << " at t=" << cand;
      throw BoundViolation(os.str());
    }
    tau = cand;
    if (rng.uniform() * lam >= q) continue;
    const int y = rng.categorical(w);
    const MicroIndex mi = model_.index_of(y);
    const int from_macro = path.events.back().macro;
    path.events.push_back({cand, mi.macro, mi.micro, y});
    x = y;
    if (mi.macro != from_macro && cand <= stop_if_leaves_before) return false;
  }
  return true;
}

SimPath Simulator::sample_path(double start_time, int start_offset, std::uint64_t seed) const {
  if (start_time < t0_ - 1e-12 || start_time > horizon_)
    throw DomainError("simulation start outside the simulator's window");
  SimPath p;
  p.seed = seed;
  p.start_time = start_time;
  p.horizon = horizon_;
  const MicroIndex mi = model_.index_of(start_offset);
  p.events.push_back({start_time, mi.macro, mi.micro, start_offset});
  Rng rng(seed);
  simulate(p, rng, -1.0);
  return p;
}

SimPath Simulator::sample_conditioned(const Conditioning& c, std::uint64_t seed,
                                      std::size_t* attempts) const {
  if (c.start_time < t0_ - 1e-12 || c.start_time > horizon_ ||
      c.observe_time < c.start_time)
    throw DomainError("conditioning window outside the simulator's range");
  if (c.micro_dist.size() != model_.micro_count(c.macro))
    throw DomainError("conditioning microstate law has the wrong length");
  Rng rng(seed);
  std::vector<double> dist(c.micro_dist.data(), c.micro_dist.data() + c.micro_dist.size());
  for (std::size_t a = 1;; ++a) {
    SimPath p;
    p.seed = seed;
    p.start_time = c.start_time;
    p.horizon = horizon_;
    const int micro = rng.categorical(dist);
    p.events.push_back({c.start_time, c.macro, micro, model_.offset(c.macro) + micro});
    if (simulate(p, rng, c.observe_time)) {
      if (attempts) *attempts = a;
      return p;
    }
    if (a >= options_.max_attempts_per_path) {
      std::ostringstream os;
      os << "sim: no path stayed in macrostate " << c.macro + 1 << " from " << c.start_time
         << " to " << c.observe_time << " in " << a << " attempts";
      throw InfeasibleConditioning(os.str());
    }
  }
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

Estimate Simulator::estimate(const Conditioning& c, std::size_t n_outputs,
                             const Functional& f, std::size_t n_paths,
                             std::uint64_t seed) const {
  if (n_paths == 0) throw DomainError("estimate needs at least one path");
  std::vector<double> values(n_paths * n_outputs, 0.0);
  std::vector<std::size_t> tries(n_paths, 0);
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (n_paths + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t ci) {
    const std::size_t lo = ci * kChunk;
    const std::size_t hi = std::min(n_paths, lo + kChunk);
    for (std::size_t k = lo; k < hi; ++k) {
      const SimPath p = sample_conditioned(c, path_seed(seed, k), &tries[k]);
      f(p, std::span<double>(values.data() + k * n_outputs, n_outputs));
    }
  });
  Estimate e;
  e.paths = n_paths;
  for (auto t : tries) e.attempts += t;
  if (static_cast<double>(n_paths) / static_cast<double>(e.attempts) < 1e-4) {
    std::ostringstream os;
    os << "sim: acceptance rate " << static_cast<double>(n_paths) / e.attempts
       << " below 1e-4";
    throw InfeasibleConditioning(os.str());
  }
  std::vector<double> col(n_paths);
  for (std::size_t o = 0; o < n_outputs; ++o) {
    for (std::size_t k = 0; k < n_paths; ++k) col[k] = values[k * n_outputs + o];
    const double mean = pairwise_sum(col) / static_cast<double>(n_paths);
    for (auto& v : col) v = (v - mean) * (v - mean);
    const double var =
        n_paths > 1 ? pairwise_sum(col) / static_cast<double>(n_paths - 1) : 0.0;
    e.mean.push_back(mean);
    e.std_error.push_back(std::sqrt(var / static_cast<double>(n_paths)));
  }
  return e;
}

SimPath sample_path(const AggregateModel& model, double horizon, std::uint64_t seed) {
  Simulator sim(model, 0.0, horizon);
  Conditioning c;
  c.start_time = 0.0;
  c.macro = 0;
  c.micro_dist = model.initial();
  c.observe_time = 0.0;
  return sim.sample_conditioned(c, seed);
}

Functional sojourn_survival_functional(std::vector<double> times) {
  return [times = std::move(times)](const SimPath& p, std::span<double> out) {
    const auto idx = p.first_macro_jump_after(p.start_time);
    const double exit = idx < 0 ? INFINITY : p.events[idx].time;
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = exit > times[i] ? 1.0 : 0.0;
  };
}

Functional mark_frequency_functional(int macrostates) {
  return [macrostates](const SimPath& p, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const auto idx = p.first_macro_jump_after(p.start_time);
    if (idx >= 0 && p.events[idx].macro < macrostates) out[p.events[idx].macro] = 1.0;
  };
}

Functional occupation_tail_functional(std::vector<TailQuery> queries) {
  return [queries = std::move(queries)](const SimPath& p, std::span<double> out) {
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const auto& q = queries[i];
      const SimEvent& e = p.state_at(q.s);
      out[i] = (e.offset == q.offset && q.s - p.spell_start(q.s) > q.z) ? 1.0 : 0.0;
    }
  };
}

namespace {

constexpr std::array<double, 5> kNodes = {0.0, -0.5384693101056831, 0.5384693101056831,
                                          -0.9061798459386640, 0.9061798459386640};
constexpr std::array<double, 5> kWeights = {0.5688888888888889, 0.4786286704993665,
                                            0.4786286704993665, 0.2369268850561891,
                                            0.2369268850561891};

}  // namespace

double path_payments(const SimPath& path, const PaymentSpec& payments, double from,
                     double to, const PathWeight& w) {
  to = std::min(to, std::min(path.horizon, payments.horizon));
  if (!(to > from)) return 0.0;
  const auto& ev = path.events;
  double total = 0.0;
  double spell = ev.front().time;
  const auto time_bps = payments.time_breakpoints();
  const auto& interest_bps = payments.interest.breakpoints();
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (i > 0 && ev[i].macro != ev[i - 1].macro) spell = ev[i].time;
    const double a = ev[i].time;
    const double b = i + 1 < ev.size() ? ev[i + 1].time : path.horizon;
    const int j = ev[i].macro;
    const double lo = std::max(a, from);
    const double hi = std::min(b, to);
    if (hi > lo && !payments.sojourn[j].is_zero()) {
      std::vector<double> cuts{lo, hi};
      for (double x : time_bps)
        if (x > lo && x < hi) cuts.push_back(x);
      for (double x : interest_bps)
        if (x > lo && x < hi) cuts.push_back(x);
      for (double z : payments.sojourn[j].duration_breakpoints())
        if (spell + z > lo && spell + z < hi) cuts.push_back(spell + z);
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double pa = cuts[c];
        const double pb = cuts[c + 1];
        if (!(pb > pa)) continue;
        const int pieces = std::max(1, static_cast<int>(std::ceil((pb - pa) / 0.5)));
        const double width = (pb - pa) / pieces;
        for (int q = 0; q < pieces; ++q) {
          const double mid = pa + (q + 0.5) * width;
          double acc = 0.0;
          for (std::size_t g = 0; g < kNodes.size(); ++g) {
            const double s = mid + 0.5 * width * kNodes[g];
            double v = payments.sojourn_rate(j, s, s - spell);
            if (v != 0.0 && w) v *= w(path, s);
            acc += kWeights[g] * v;
          }
          total += acc * 0.5 * width;
        }
      }
    }
    if (i + 1 < ev.size() && ev[i + 1].macro != j) {
      const double tj = ev[i + 1].time;
      if (tj > from && tj <= to) {
        double v = payments.transition_payment(j, ev[i + 1].macro, tj, tj - spell);
        if (v != 0.0 && w) v *= w(path, tj);
        total += v;
      }
    }
  }
  return total;
}

Functional binned_payments_functional(PaymentSpec payments, double from,
                                      std::vector<double> edges) {
  return [payments = std::move(payments), from, edges = std::move(edges)](
             const SimPath& p, std::span<double> out) {
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
      out[i] = path_payments(p, payments, std::max(from, edges[i]), edges[i + 1]);
  };
}

Functional discounted_payments_functional(PaymentSpec payments, double from) {
  return [payments = std::move(payments), from](const SimPath& p, std::span<double> out) {
    const PaymentSpec& ps = payments;
    out[0] = path_payments(p, ps, from, ps.horizon,
                           [&ps, from](const SimPath&, double s) { return ps.discount(from, s); });
  };
}

CsvTable path_dump(std::span<const SimPath> paths) {
  CsvTable t({"path_id", "time", "macro", "micro"});
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (const auto& e : paths[i].events)
      t.add_row({std::to_string(i), format_number(e.time), std::to_string(e.macro + 1),
                 std::to_string(e.micro + 1)});
  return t;
}

}  // namespace aggmark
