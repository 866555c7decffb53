#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "aggmark/csv.hpp"
#include "aggmark/model.hpp"
#include "aggmark/payments.hpp"

namespace aggmark {

/// splitmix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x);
/// Independent per-path seed derived from a master seed.
std::uint64_t path_seed(std::uint64_t master, std::uint64_t path_id);

/// mt19937_64 with platform-independent uniform and exponential draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform on [0, 1).
  double uniform();
  double exponential(double rate);
  /// Index drawn from nonnegative weights with positive total.
  int categorical(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
};

struct SimEvent {
  double time;
  int macro;
  int micro;
  int offset;
};

/// Simulated microstate path. events[0] is the starting state; later
/// entries are microstate jumps in time order.
struct SimPath {
  std::uint64_t seed = 0;
  double start_time = 0.0;
  double horizon = 0.0;
  std::vector<SimEvent> events;

  /// Events where the macrostate changes, starting with events[0].
  std::vector<SimEvent> macro_events() const;
  /// State in force at t (right-continuous).
  const SimEvent& state_at(double t) const;
  int macro_at(double t) const { return state_at(t).macro; }
  /// Start of the macrostate spell in force at t.
  double spell_start(double t) const;
  /// First macrostate jump after `after`, if any: index into events.
  std::ptrdiff_t first_macro_jump_after(double after) const;
};

/// Start the chain at start_time in `macro` with microstate law micro_dist,
/// and keep only paths that stay in `macro` up to observe_time.
struct Conditioning {
  double start_time = 0.0;
  int macro = 0;
  RowVector micro_dist;
  double observe_time = 0.0;

  /// Spell in macrostate i that started at t - u, observed at t. The
  /// microstate law at the spell start is model.entry_distribution.
  static Conditioning spell(const AggregateModel& model, int i, double t, double u);
};

struct SimOptions {
  double bound_width = 0.25;
  double safety = 1.5;
  std::size_t max_attempts_per_path = 100000;
};

struct Estimate {
  std::vector<double> mean;
  std::vector<double> std_error;
  std::size_t paths = 0;
  std::size_t attempts = 0;
};

/// Writes one value per output for an accepted path.
using Functional = std::function<void(const SimPath&, std::span<double>)>;

/// Thinning simulator of the microstate chain on [t0, horizon].
class Simulator {
 public:
  Simulator(AggregateModel model, double t0, double horizon, SimOptions options = {});

  const AggregateModel& model() const { return model_; }
  double horizon() const { return horizon_; }

  /// Path from (start_time, start_offset) to the horizon.
  SimPath sample_path(double start_time, int start_offset, std::uint64_t seed) const;
  /// Conditioned path; `attempts` receives the number of tries used.
  SimPath sample_conditioned(const Conditioning& c, std::uint64_t seed,
                             std::size_t* attempts = nullptr) const;

  /// Mean and standard error of `f` over n_paths accepted paths. Paths run
  /// in parallel; results do not depend on the thread count.
  Estimate estimate(const Conditioning& c, std::size_t n_outputs, const Functional& f,
                    std::size_t n_paths, std::uint64_t seed) const;

  /// Thinning bound for flat microstate `offset` at time t.
  double bound(int offset, double t) const;

 private:
  bool simulate(SimPath& path, Rng& rng, double stop_if_leaves_before) const;

  AggregateModel model_;
  double t0_;
  double horizon_;
  SimOptions options_;
  std::vector<double> edges_;
  std::vector<std::vector<double>> bounds_;  // [interval][offset]
};

/// Path from time 0 in macrostate 0 with the model's initial law.
SimPath sample_path(const AggregateModel& model, double horizon, std::uint64_t seed);

/// Pairwise (cascade) sum; order fixed by the input.
double pairwise_sum(std::span<const double> v);

// Functional factories.

/// 1 while the starting macrostate is still occupied at each time.
Functional sojourn_survival_functional(std::vector<double> times);
/// One-hot destination of the first macrostate jump (all zero if none).
Functional mark_frequency_functional(int macrostates);

struct TailQuery {
  double s;
  double z;
  int offset;
};
/// 1(X(s) = offset, U(s) > z) per query.
Functional occupation_tail_functional(std::vector<TailQuery> queries);

/// Weight applied to payments at time s on a path (discounting, scaling).
using PathWeight = std::function<double(const SimPath&, double)>;

/// Payment stream of a path over (from, to] weighted by w. Sojourn parts use
/// Gauss-Legendre on pieces split at payment breakpoints; transition
/// payments use the pre-jump duration.
double path_payments(const SimPath& path, const PaymentSpec& payments, double from,
                     double to, const PathWeight& w = {});

/// Payments per bin [edges[i], edges[i+1]) after `from`, undiscounted.
Functional binned_payments_functional(PaymentSpec payments, double from,
                                      std::vector<double> edges);
/// Discounted value at `from` of all payments after `from`.
Functional discounted_payments_functional(PaymentSpec payments, double from);

/// Debug dump: (path_id, time, macro, micro), 1-based labels.
CsvTable path_dump(std::span<const SimPath> paths);

}  // namespace aggmark
