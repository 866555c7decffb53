#include "aggmark/iph.hpp"

#include <sstream>

#include "aggmark/error.hpp"

namespace aggmark {

namespace {

void check_shape(const IphRepresentation& rep) {
  if (rep.initial.size() != rep.subintensity.dimension())
    throw ValidationError("iph: initial vector length does not match T");
}

}  // namespace

void IphRepresentation::validate(const TimeGrid& grid) const {
  check_shape(*this);
  double total = 0.0;
  for (Eigen::Index i = 0; i < initial.size(); ++i) {
    if (!(initial[i] >= 0.0))
      throw ValidationError("iph: initial vector has a negative entry");
    total += initial[i];
  }
  if (total > 1.0 + 1e-12)
    throw ValidationError("iph: initial vector sums above 1");
  for (double t : grid.points()) {
    const Matrix m = subintensity(t);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, i) > 0.0) {
        std::ostringstream os;
        os << "iph: positive diagonal entry " << i << " at t=" << t;
        throw ValidationError(os.str());
      }
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (i != j && m(i, j) < 0.0) {
          std::ostringstream os;
          os << "iph: negative off-diagonal (" << i << "," << j << ") at t=" << t;
          throw ValidationError(os.str());
        }
      if (m.row(i).sum() > 1e-12) {
        std::ostringstream os;
        os << "iph: row " << i << " sums above zero at t=" << t;
        throw ValidationError(os.str());
      }
    }
  }
}

double iph_survival(const IphRepresentation& rep, double x,
                    const TimeGrid& grid) {
  check_shape(rep);
  if (x < 0.0) throw DomainError("iph: x must be nonnegative");
  if (x == 0.0) return rep.initial.sum();
  const Matrix f = product_integral(rep.subintensity, 0.0, x, grid);
  return (rep.initial * f).sum();
}

double iph_cdf(const IphRepresentation& rep, double x, const TimeGrid& grid) {
  return 1.0 - iph_survival(rep, x, grid);
}

double iph_density(const IphRepresentation& rep, double x,
                   const TimeGrid& grid) {
  check_shape(rep);
  if (x < 0.0) throw DomainError("iph: x must be nonnegative");
  const Matrix t = rep.subintensity(x);
  const Vector exit = -t.rowwise().sum();
  if (x == 0.0) return rep.initial.dot(exit);
  const Matrix f = product_integral(rep.subintensity, 0.0, x, grid);
  return (rep.initial * f).dot(exit);
}

IphRepresentation overshoot_representation(const IphRepresentation& rep,
                                           double s, const TimeGrid& grid) {
  check_shape(rep);
  if (s < 0.0) throw DomainError("iph: s must be nonnegative");
  RowVector a = rep.initial;
  if (s > 0.0) a = rep.initial * product_integral(rep.subintensity, 0.0, s, grid);
  const double mass = a.sum();
  if (!(mass >= kConditioningFloor)) {
    std::ostringstream os;
    os << "iph: survival at s=" << s << " is " << mass
       << ", below the conditioning floor";
    throw ConditioningOnNull(os.str());
  }
  MatrixFunction base = rep.subintensity;
  MatrixFunction shifted(base.dimension(),
                         [base, s](double x) { return base(s + x); });
  return IphRepresentation{a / mass, std::move(shifted)};
}

}  // namespace aggmark
