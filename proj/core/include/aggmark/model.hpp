#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aggmark/catalogue.hpp"
#include "aggmark/prodint.hpp"

namespace aggmark {

/// One entry of the microstate intensity matrix.
struct IntensityEntry {
  enum class Kind { zero, function, complement };
  Kind kind = Kind::zero;
  ScalarFunction function;

  static IntensityEntry none() { return {}; }
  static IntensityEntry of(ScalarFunction f) {
    return {Kind::function, std::move(f)};
  }
  /// Diagonal only: minus the sum of the other entries in the row.
  static IntensityEntry complement() { return {Kind::complement, {}}; }
};

/// Square table of entries, row-major.
using EntryGrid = std::vector<std::vector<IntensityEntry>>;

/// Flat microstate position. Macrostates and microstates are 0-based here;
/// files and reports use 1-based labels.
struct MicroIndex {
  int macro = 0;
  int micro = 0;
  int offset = 0;
};

/// Rank-one jump structure M_jk(t) = beta_jk(t) pi_k(t).
struct ResetStructure {
  /// beta[j][k] has d_j functions, or is empty when there is no j -> k flow.
  std::vector<std::vector<std::vector<ScalarFunction>>> beta;
  /// pi[k] has d_k functions.
  std::vector<std::vector<ScalarFunction>> pi;

  Vector beta_at(int j, int k, double t) const;
  RowVector pi_at(int k, double t) const;
  bool has_flow(int j, int k) const;
};

struct Violation {
  enum class Kind {
    negative_off_diagonal,
    row_sum,
    initial_negative,
    initial_sum,
    reset_pi_sum,
    reset_negative_beta,
    reset_reconstruction,
    non_finite
  };
  Kind kind;
  double time;
  int row;     // flat index, -1 if not applicable
  int column;  // flat index, -1 if not applicable
  double value;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary(std::size_t max_lines = 10) const;
};

inline constexpr double kRowSumTolerance = 1e-10;
inline constexpr double kInitialSumTolerance = 1e-12;
inline constexpr double kResetTolerance = 1e-12;

/// Aggregate Markov model: J macrostates, d_j microstates each, block
/// intensity M(t) of dimension d̄ = sum d_j and initial law on macrostate 0.
class AggregateModel {
 public:
  AggregateModel(std::vector<int> micro_counts, EntryGrid entries,
                 std::vector<double> initial,
                 std::optional<ResetStructure> reset = std::nullopt);

  /// Off-diagonal blocks are built as beta_jk pi_k outer products. Diagonal
  /// blocks are taken as given; rows are not forced to zero here.
  static AggregateModel build_from_reset(std::vector<int> micro_counts,
                                         std::vector<EntryGrid> diagonal_blocks,
                                         ResetStructure reset,
                                         std::vector<double> initial);

  int macrostates() const { return static_cast<int>(counts_.size()); }
  const std::vector<int>& micro_counts() const { return counts_; }
  int micro_count(int j) const { return counts_.at(j); }
  int dimension() const { return dbar_; }
  int offset(int j) const { return offsets_.at(j); }
  MicroIndex index(int j, int micro) const;
  MicroIndex index_of(int offset) const;

  const EntryGrid& entries() const { return entries_; }
  const RowVector& initial() const { return initial_; }
  bool has_reset() const { return reset_.has_value(); }
  const ResetStructure& reset() const;
  /// True when off-diagonal blocks were generated from the reset structure.
  bool blocks_from_reset() const { return blocks_from_reset_; }

  const std::vector<std::string>& names() const { return names_; }
  void set_names(std::vector<std::string> names);

  Matrix intensity(double t) const;
  Matrix block(int j, int k, double t) const;
  MatrixFunction intensity_function() const;
  MatrixFunction diagonal_block_function(int j) const;
  /// diag(M_11, ..., M_JJ) as a d̄-dimensional function.
  MatrixFunction block_diagonal_function() const;

  /// Sorted union of breakpoints of every entry function.
  std::vector<double> breakpoints() const;

  /// Macrostates with no outgoing flow (structurally zero off-diagonal blocks).
  bool is_absorbing(int j) const;
  /// True if block (j, k) has no nonzero entry.
  bool block_is_zero(int j, int k) const;

  /// Law of the microstate on entering macrostate k at time t: model.initial
  /// when k is the initial macrostate at the contract start t = 0, otherwise
  /// pi_k(t). Single-microstate macrostates need no reset structure.
  RowVector entry_distribution(int k, double t) const;

 private:
  struct Term {
    int row;
    int col;
    ScalarFunction f;
  };
  void compile();

  std::vector<int> counts_;
  std::vector<int> offsets_;
  int dbar_ = 0;
  EntryGrid entries_;
  RowVector initial_;
  std::optional<ResetStructure> reset_;
  bool blocks_from_reset_ = false;
  std::vector<std::string> names_;
  std::shared_ptr<const std::vector<Term>> terms_;
  std::shared_ptr<const std::vector<int>> complement_rows_;
};

ValidationReport validate(const AggregateModel& model,
                          std::span<const double> sample_times);

/// m_j(t) = -M_jj(t) 1. Throws InconsistentModel when it differs from
/// sum_k M_jk(t) 1 by more than 1e-10.
Vector exit_rate(const AggregateModel& model, int j, double t);

/// Semi-Markov transition rate of a reset model: the spell in j started at
/// t - u with microstate law pi_j(t - u) and aged under M_jj.
double semi_markov_rate(const AggregateModel& model, int j, int k, double t,
                        double u, const TimeGrid& grid);

/// Normalised microstate law after surviving in j over [t - u, t].
RowVector spell_distribution(const AggregateModel& model, int j, double t,
                             double u, const TimeGrid& grid);

}  // namespace aggmark
