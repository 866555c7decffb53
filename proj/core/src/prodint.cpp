#include "aggmark/prodint.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aggmark/error.hpp"

namespace aggmark {

namespace {

double tol_for(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

// Grid points strictly inside (t, s) with t and s as end points.
std::vector<double> segment_points(const TimeGrid& grid, double t, double s) {
  std::vector<double> out{t};
  for (double p : grid.points())
    if (p > t + tol_for(t) && p < s - tol_for(s)) out.push_back(p);
  out.push_back(s);
  return out;
}

void check_span(const TimeGrid& grid, double t, double s) {
  if (!(t <= s)) {
    std::ostringstream os;
    os << "product integral needs t <= s (t=" << t << ", s=" << s << ")";
    throw DomainError(os.str());
  }
  if (!grid.covers(t, s)) {
    std::ostringstream os;
    os << "[" << t << ", " << s << "] not covered by grid ["
       << grid.front() << ", " << grid.back() << "]";
    throw DomainError(os.str());
  }
}

// Advance y over one segment [a, b] (forward) with n RK4 steps.
void forward_segment(const MatrixFunction& fn, Matrix& y, double a, double b,
                     int n, rk4::Workspace& ws) {
  const double h = (b - a) / n;
  const double eps = rk4::endpoint_nudge(h);
  Matrix a0 = fn(a + eps);
  for (int i = 0; i < n; ++i) {
    const double x = a + i * h;
    const double x1 = (i + 1 == n) ? b : a + (i + 1) * h;
    const Matrix amid = fn(x + 0.5 * h);
    Matrix a1 = (i + 1 == n) ? fn(b - eps) : fn(x1);
    rk4::forward_step(y, a0, amid, a1, x1 - x, ws);
    rk4::check_finite(y, x1);
    a0 = std::move(a1);
  }
}

void backward_segment(const MatrixFunction& fn, Matrix& y, double a, double b,
                      int n, rk4::Workspace& ws) {
  const double h = (b - a) / n;
  const double eps = rk4::endpoint_nudge(h);
  Matrix a1 = fn(b - eps);
  for (int i = n; i > 0; --i) {
    const double x1 = (i == n) ? b : a + i * h;
    const double x0 = (i == 1) ? a : a + (i - 1) * h;
    const Matrix amid = fn(x0 + 0.5 * (x1 - x0));
    Matrix a0 = (i == 1) ? fn(a + eps) : fn(x0);
    rk4::backward_step(y, a1, amid, a0, x1 - x0, ws);
    rk4::check_finite(y, x0);
    a1 = std::move(a0);
  }
}

}  // namespace

MatrixFunction::MatrixFunction(int dimension, Evaluator evaluate)
    : dimension_(dimension), evaluate_(std::move(evaluate)) {
  if (dimension_ <= 0) throw DomainError("matrix function dimension must be positive");
  if (!evaluate_) throw DomainError("matrix function needs an evaluator");
}

Matrix MatrixFunction::operator()(double t) const {
  Matrix m = evaluate_(t);
  if (m.rows() != dimension_ || m.cols() != dimension_) {
    std::ostringstream os;
    os << "matrix function returned " << m.rows() << "x" << m.cols()
       << ", expected " << dimension_ << "x" << dimension_;
    throw DomainError(os.str());
  }
  return m;
}

TimeGrid::TimeGrid(std::vector<double> points, int substeps_per_interval)
    : points_(std::move(points)), substeps_(substeps_per_interval) {
  if (points_.size() < 2) throw DomainError("time grid needs at least 2 points");
  if (substeps_ <= 0) throw DomainError("substeps_per_interval must be positive");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i])) throw DomainError("time grid point not finite");
    if (i > 0 && !(points_[i] > points_[i - 1]))
      throw DomainError("time grid points must be strictly increasing");
  }
}

TimeGrid TimeGrid::uniform(double start, double end, int steps,
                           int substeps_per_interval) {
  if (steps <= 0) throw DomainError("grid steps must be positive");
  if (!(end > start)) throw DomainError("grid end must exceed start");
  std::vector<double> p(static_cast<std::size_t>(steps) + 1);
  const double h = (end - start) / steps;
  for (int i = 0; i <= steps; ++i) p[i] = start + i * h;
  p.back() = end;
  return TimeGrid(std::move(p), substeps_per_interval);
}

std::optional<std::size_t> TimeGrid::find(double t) const {
  auto it = std::lower_bound(points_.begin(), points_.end(), t - tol_for(t));
  if (it != points_.end() && std::abs(*it - t) <= tol_for(t))
    return static_cast<std::size_t>(it - points_.begin());
  return std::nullopt;
}

bool TimeGrid::covers(double a, double b) const {
  return a >= front() - tol_for(front()) && b <= back() + tol_for(back());
}

TimeGrid TimeGrid::with_points(std::span<const double> extra) const {
  std::vector<double> p = points_;
  for (double x : extra)
    if (!find(x)) p.push_back(x);
  std::sort(p.begin(), p.end());
  std::vector<double> merged;
  for (double x : p)
    if (merged.empty() || x - merged.back() > tol_for(x)) merged.push_back(x);
  return TimeGrid(std::move(merged), substeps_);
}

TimeGrid TimeGrid::shifted(double origin) const {
  std::vector<double> p = points_;
  for (double& x : p) x -= origin;
  return TimeGrid(std::move(p), substeps_);
}

TimeGrid TimeGrid::restricted(double a, double b) const {
  if (!(b > a)) throw DomainError("restricted grid needs a < b");
  std::vector<double> p{a};
  for (double x : points_)
    if (x > a + tol_for(a) && x < b - tol_for(b)) p.push_back(x);
  p.push_back(b);
  return TimeGrid(std::move(p), substeps_);
}

TimeGrid span_grid(const TimeGrid& reference, double a, double b,
                   std::span<const double> breakpoints) {
  if (!(b > a)) throw DomainError("span grid needs a < b");
  const double h = (reference.back() - reference.front()) /
                   static_cast<double>(reference.size() - 1);
  std::vector<double> p;
  auto fill = [&](double lo, double hi) {
    if (!(hi > lo)) return;
    const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / h - 1e-9)));
    for (int i = 1; i < n; ++i) p.push_back(lo + (hi - lo) * i / n);
  };
  const double ref_lo = std::max(a, reference.front());
  const double ref_hi = std::min(b, reference.back());
  if (ref_lo < ref_hi) {
    fill(a, ref_lo);
    if (ref_lo > a) p.push_back(ref_lo);
    for (double x : reference.points())
      if (x > ref_lo && x < ref_hi) p.push_back(x);
    if (ref_hi < b) p.push_back(ref_hi);
    fill(ref_hi, b);
  } else {
    fill(a, b);
  }
  for (double x : breakpoints)
    if (x > a && x < b) p.push_back(x);
  p.push_back(a);
  p.push_back(b);
  std::sort(p.begin(), p.end());
  std::vector<double> merged;
  for (double x : p)
    if (merged.empty() || x - merged.back() > tol_for(x)) merged.push_back(x);
  if (merged.back() != b) merged.back() = b;
  return TimeGrid(std::move(merged), reference.substeps());
}

Matrix product_integral(const MatrixFunction& a, double t, double s,
                        const TimeGrid& grid) {
  check_span(grid, t, s);
  const int d = a.dimension();
  Matrix y = Matrix::Identity(d, d);
  if (t == s) return y;
  rk4::Workspace ws;
  ws.resize(d, d);
  const auto pts = segment_points(grid, t, s);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    forward_segment(a, y, pts[i], pts[i + 1], grid.substeps(), ws);
  return y;
}

std::vector<Matrix> forward_sweep(const MatrixFunction& a, double t,
                                  const TimeGrid& grid) {
  const auto start = grid.find(t);
  if (!start) throw DomainError("forward sweep must start on a grid point");
  const int d = a.dimension();
  std::vector<Matrix> out;
  out.reserve(grid.size() - *start);
  Matrix y = Matrix::Identity(d, d);
  out.push_back(y);
  rk4::Workspace ws;
  ws.resize(d, d);
  for (std::size_t l = *start; l + 1 < grid.size(); ++l) {
    forward_segment(a, y, grid[l], grid[l + 1], grid.substeps(), ws);
    out.push_back(y);
  }
  return out;
}

std::vector<Matrix> backward_sweep(const MatrixFunction& a, double s,
                                   const TimeGrid& grid) {
  const auto end = grid.find(s);
  if (!end) throw DomainError("backward sweep must start on a grid point");
  const int d = a.dimension();
  std::vector<Matrix> out(*end + 1);
  Matrix y = Matrix::Identity(d, d);
  out[*end] = y;
  rk4::Workspace ws;
  ws.resize(d, d);
  for (std::size_t l = *end; l > 0; --l) {
    backward_segment(a, y, grid[l - 1], grid[l], grid.substeps(), ws);
    out[l - 1] = y;
  }
  return out;
}

namespace rk4 {

double endpoint_nudge(double step) { return 1e-9 * step; }

void Workspace::resize(Eigen::Index rows, Eigen::Index cols) {
  k1.resize(rows, cols);
  k2.resize(rows, cols);
  k3.resize(rows, cols);
  k4.resize(rows, cols);
  tmp.resize(rows, cols);
}

void forward_step(Matrix& y, const Matrix& a0, const Matrix& amid,
                  const Matrix& a1, double h, Workspace& ws) {
  if (ws.k1.rows() != y.rows() || ws.k1.cols() != y.cols())
    ws.resize(y.rows(), y.cols());
  ws.k1.noalias() = y * a0;
  ws.tmp = y + 0.5 * h * ws.k1;
  ws.k2.noalias() = ws.tmp * amid;
  ws.tmp = y + 0.5 * h * ws.k2;
  ws.k3.noalias() = ws.tmp * amid;
  ws.tmp = y + h * ws.k3;
  ws.k4.noalias() = ws.tmp * a1;
  y += (h / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
}

void backward_step(Matrix& y, const Matrix& a1, const Matrix& amid,
                   const Matrix& a0, double h, Workspace& ws) {
  if (ws.k1.rows() != y.rows() || ws.k1.cols() != y.cols())
    ws.resize(y.rows(), y.cols());
  ws.k1.noalias() = a1 * y;
  ws.tmp = y + 0.5 * h * ws.k1;
  ws.k2.noalias() = amid * ws.tmp;
  ws.tmp = y + 0.5 * h * ws.k2;
  ws.k3.noalias() = amid * ws.tmp;
  ws.tmp = y + h * ws.k3;
  ws.k4.noalias() = a0 * ws.tmp;
  y += (h / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
}

void check_finite(const Matrix& y, double time) {
  const double* p = y.data();
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(p[i]) || std::abs(p[i]) > kBlowupThreshold) {
      std::ostringstream os;
      os << "prodint: sweep blew up at t=" << time;
      throw NumericalBlowup(time, os.str());
    }
  }
}

}  // namespace rk4

}  // namespace aggmark
