#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace aggmark {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Square-matrix valued function of time. Evaluation must be deterministic.
class MatrixFunction {
 public:
  using Evaluator = std::function<Matrix(double)>;

  MatrixFunction(int dimension, Evaluator evaluate);

  int dimension() const { return dimension_; }
  /// Throws DomainError when the evaluator returns the wrong shape.
  Matrix operator()(double t) const;

 private:
  int dimension_;
  Evaluator evaluate_;
};

/// Ordered evaluation grid. Each interval is split into `substeps` fixed
/// Runge-Kutta steps. Intensity discontinuities must sit on grid points.
class TimeGrid {
 public:
  static constexpr int kDefaultSubsteps = 10;

  explicit TimeGrid(std::vector<double> points,
                    int substeps_per_interval = kDefaultSubsteps);
  static TimeGrid uniform(double start, double end, int steps,
                          int substeps_per_interval = kDefaultSubsteps);

  std::span<const double> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }
  int substeps() const { return substeps_; }

  /// Index of the grid point equal to `t` up to a relative 1e-12 tolerance.
  std::optional<std::size_t> find(double t) const;
  bool covers(double a, double b) const;

  /// Same substeps, with `extra` points merged in.
  TimeGrid with_points(std::span<const double> extra) const;
  /// Points shifted by `-origin` (used for overshoot representations).
  TimeGrid shifted(double origin) const;
  /// Points restricted to [a, b], with a and b inserted as end points.
  TimeGrid restricted(double a, double b) const;

 private:
  std::vector<double> points_;
  int substeps_;
};

/// Grid on [a, b] built from `reference`: its points inside (a, b), filled
/// at the reference's mean spacing where the reference does not reach, plus
/// `breakpoints` inside (a, b). Requires a < b.
TimeGrid span_grid(const TimeGrid& reference, double a, double b,
                   std::span<const double> breakpoints = {});

/// Entries larger than this in magnitude abort a sweep.
inline constexpr double kBlowupThreshold = 1e12;

/// F(t, s) = prod_t^s (I + A(x) dx), solving dF/ds = F A(s), F(t,t) = I with
/// classical RK4. The interval is cut at every grid point inside (t, s); each
/// piece uses the grid's substep count. F(t, t) is exactly the identity.
Matrix product_integral(const MatrixFunction& a, double t, double s,
                        const TimeGrid& grid);

/// F(t, t_l) for every grid point t_l >= t; element 0 is the identity.
std::vector<Matrix> forward_sweep(const MatrixFunction& a, double t,
                                  const TimeGrid& grid);

/// F(t_l', s) for every grid point t_l' <= s, ascending in t_l' (last element
/// is the identity). Solves dF/dt = -A(t) F backwards from s.
std::vector<Matrix> backward_sweep(const MatrixFunction& a, double s,
                                   const TimeGrid& grid);

namespace rk4 {

/// Nudge applied to stage evaluations at interval ends so that intensities
/// with jumps on grid points are sampled from inside the interval.
double endpoint_nudge(double step);

/// Scratch space for the step kernels.
struct Workspace {
  Matrix k1, k2, k3, k4, tmp;
  void resize(Eigen::Index rows, Eigen::Index cols);
};

/// y <- y advanced by h under y' = y A(x); a0/amid/a1 are A at the step's
/// start, midpoint and end.
void forward_step(Matrix& y, const Matrix& a0, const Matrix& amid,
                  const Matrix& a1, double h, Workspace& ws);

/// y <- y moved back by h under dy/dt = -A(t) y; a1 is A at the later end,
/// a0 at the earlier end.
void backward_step(Matrix& y, const Matrix& a1, const Matrix& amid,
                   const Matrix& a0, double h, Workspace& ws);

/// Throws NumericalBlowup naming `time` if any entry is non-finite or above
/// kBlowupThreshold in magnitude.
void check_finite(const Matrix& y, double time);

}  // namespace rk4

}  // namespace aggmark
