#include "oracles.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace oracles {

Matrix expm(const Matrix& a) { return a.exp(); }

namespace {

Vector rate_vector(const MarkovChain& c, double x) {
  if (x > c.horizon) return Vector::Zero(c.states);
  const Matrix m = c.intensity(x);
  const Matrix b = c.transition(x);
  Vector out = c.sojourn(x);
  for (int j = 0; j < c.states; ++j)
    for (int k = 0; k < c.states; ++k)
      if (j != k) out[j] += m(j, k) * b(j, k);
  return out;
}

// One joint RK4 step of P' = P M, A' = P c.
void step(const MarkovChain& c, double x, double h, Matrix& p, Matrix& a) {
  auto dp = [&](double s, const Matrix& q) { return Matrix(q * c.intensity(s)); };
  auto da = [&](double s, const Matrix& q) { return Matrix(q * rate_vector(c, s)); };
  const Matrix k1 = dp(x, p), l1 = da(x, p);
  const Matrix p2 = p + 0.5 * h * k1;
  const Matrix k2 = dp(x + 0.5 * h, p2), l2 = da(x + 0.5 * h, p2);
  const Matrix p3 = p + 0.5 * h * k2;
  const Matrix k3 = dp(x + 0.5 * h, p3), l3 = da(x + 0.5 * h, p3);
  const Matrix p4 = p + h * k3;
  const Matrix k4 = dp(x + h, p4), l4 = da(x + h, p4);
  p += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  a += h / 6.0 * (l1 + 2 * l2 + 2 * l3 + l4);
}

}  // namespace

Matrix transition_matrix(const MarkovChain& c, double t, double s, double h) {
  Matrix p = Matrix::Identity(c.states, c.states);
  Matrix a = Matrix::Zero(c.states, 1);
  if (s <= t) return p;
  const int n = static_cast<int>(std::ceil((s - t) / h));
  const double dh = (s - t) / n;
  for (int i = 0; i < n; ++i) step(c, t + i * dh, dh, p, a);
  return p;
}

std::vector<Vector> accumulated_cashflow(const MarkovChain& c, double t,
                                         const std::vector<double>& times, double h) {
  Matrix p = Matrix::Identity(c.states, c.states);
  Matrix a = Matrix::Zero(c.states, 1);
  std::vector<Vector> out;
  double x = t;
  for (double target : times) {
    if (target > x) {
      const int n = static_cast<int>(std::ceil((target - x) / h));
      const double dh = (target - x) / n;
      for (int i = 0; i < n; ++i) step(c, x + i * dh, dh, p, a);
      x = target;
    }
    out.push_back(a.col(0));
  }
  return out;
}

Vector thiele_reserve(const MarkovChain& c, double t, double h) {
  Vector v = Vector::Zero(c.states);
  auto rhs = [&](double x, const Vector& w) {
    return Vector(c.interest(x) * w - rate_vector(c, x) - c.intensity(x) * w);
  };
  const int n = static_cast<int>(std::ceil((c.horizon - t) / h));
  const double dh = (c.horizon - t) / n;
  for (int i = n; i > 0; --i) {
    const double x = t + i * dh;
    const Vector k1 = rhs(x, v);
    const Vector k2 = rhs(x - 0.5 * dh, v - 0.5 * dh * k1);
    const Vector k3 = rhs(x - 0.5 * dh, v - 0.5 * dh * k2);
    const Vector k4 = rhs(x - dh, v - dh * k3);
    v -= dh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return v;
}

}  // namespace oracles
