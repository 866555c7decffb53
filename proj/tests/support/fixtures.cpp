#include "fixtures.hpp"

#include <random>

#include "aggmark/error.hpp"

namespace fixtures {

using aggmark::EntryGrid;
using aggmark::IntensityEntry;
using aggmark::PaymentFunction;
using aggmark::ResetStructure;

namespace {

IntensityEntry c(double v) { return IntensityEntry::of(ScalarFunction::constant(v)); }
IntensityEntry f(ScalarFunction g) { return IntensityEntry::of(std::move(g)); }
IntensityEntry comp() { return IntensityEntry::complement(); }
IntensityEntry z() { return IntensityEntry::none(); }
ScalarFunction k(double v) { return ScalarFunction::constant(v); }
ScalarFunction plus(double v, const ScalarFunction& g) {
  return ScalarFunction::affine(v, 1.0, g);
}

}  // namespace

ScalarFunction active_mortality() {
  return ScalarFunction::gompertz_makeham(5e-4, 5.346e-5, 1.0914);
}

ScalarFunction disability_onset() {
  return ScalarFunction::gompertz_makeham(4e-4, 3.467e-6, 1.1482);
}

AggregateModel disability_model(int d2) {
  const ScalarFunction mu = active_mortality();
  ResetStructure rs;
  rs.beta.assign(3, std::vector<std::vector<ScalarFunction>>(3));
  rs.pi.resize(3);
  rs.pi[0] = {k(1.0)};
  rs.pi[2] = {k(1.0)};
  rs.beta[0][1] = {disability_onset()};
  rs.beta[0][2] = {mu};
  EntryGrid dis;
  switch (d2) {
    case 1:
      rs.beta[1][0] = {k(0.8)};
      rs.beta[1][2] = {plus(0.03, mu)};
      rs.pi[1] = {k(1.0)};
      dis = {{comp()}};
      break;
    case 2:
      rs.beta[1][0] = {k(2.0), k(0.1)};
      rs.beta[1][2] = {plus(0.05, mu), plus(0.02, mu)};
      rs.pi[1] = {k(1.0), k(0.0)};
      dis = {{comp(), c(1.0)}, {z(), comp()}};
      break;
    case 3:
      rs.beta[1][0] = {k(3.0), k(0.6), k(0.05)};
      rs.beta[1][2] = {plus(0.05, mu), plus(0.03, mu), plus(0.02, mu)};
      rs.pi[1] = {k(1.0), k(0.0), k(0.0)};
      dis = {{comp(), c(1.5), z()}, {z(), comp(), c(0.8)}, {z(), z(), comp()}};
      break;
    default:
      throw aggmark::DomainError("disability model needs d2 in {1, 2, 3}");
  }
  std::vector<EntryGrid> diag{{{comp()}}, dis, {{z()}}};
  AggregateModel m = AggregateModel::build_from_reset({1, d2, 1}, std::move(diag),
                                                      std::move(rs), {1.0});
  m.set_names({"active", "disabled", "dead"});
  return m;
}

PaymentSpec waiting_period_annuity() {
  PaymentSpec p = PaymentSpec::zero(3, 65.0, k(0.02));
  p.sojourn[1] = aggmark::PaymentFunction::separable(ScalarFunction::step_before(65.0),
                                                     ScalarFunction::step_after(0.25));
  return p;
}

AggregateModel flat_chain() {
  const ScalarFunction mu = active_mortality();
  EntryGrid e{{comp(), f(disability_onset()), f(mu)},
              {c(0.8), comp(), f(plus(0.03, mu))},
              {z(), z(), z()}};
  AggregateModel m({1, 1, 1}, std::move(e), {1.0});
  m.set_names({"active", "disabled", "dead"});
  return m;
}

PaymentSpec term_insurance() {
  PaymentSpec p = PaymentSpec::zero(3, 65.0, k(0.02));
  p.sojourn[0] = aggmark::PaymentFunction::of_time(k(-0.015));
  p.sojourn[1] = aggmark::PaymentFunction::of_time(k(0.5));
  p.transition[0][2] = aggmark::PaymentFunction::of_time(k(1.0));
  p.transition[1][2] = aggmark::PaymentFunction::of_time(ScalarFunction::linear(1.5, -0.01));
  return p;
}

AggregateModel two_block_model() {
  EntryGrid e{{comp(), c(0.5), f(ScalarFunction::linear(0.4, 0.04)), c(0.1)},
              {c(0.3), comp(), z(), c(0.6)},
              {c(0.2), c(0.3), comp(), c(0.2)},
              {c(0.5), c(0.05), c(0.7), comp()}};
  return AggregateModel({2, 2}, std::move(e), {0.6, 0.4});
}

AggregateModel busy_reset_model() {
  ResetStructure rs;
  rs.beta.assign(3, std::vector<std::vector<ScalarFunction>>(3));
  rs.pi = {{k(1.0)},
           {ScalarFunction::linear(0.5, 0.03), ScalarFunction::linear(0.5, -0.03)},
           {k(1.0)}};
  rs.beta[0][1] = {ScalarFunction::linear(0.3, 0.02)};
  rs.beta[0][2] = {k(0.05)};
  rs.beta[1][0] = {k(1.2), k(0.2)};
  rs.beta[1][2] = {k(0.1), ScalarFunction::linear(0.05, 0.01)};
  std::vector<EntryGrid> diag{{{comp()}}, {{comp(), c(0.8)}, {z(), comp()}}, {{z()}}};
  return AggregateModel::build_from_reset({1, 2, 1}, std::move(diag), std::move(rs), {1.0});
}

AggregateModel free_policy_model() {
  const ScalarFunction mu = active_mortality();
  ResetStructure rs;
  rs.beta.assign(3, std::vector<std::vector<ScalarFunction>>(3));
  rs.pi = {{k(1.0), k(0.0)}, {k(1.0)}, {k(1.0)}};
  rs.beta[0][1] = {k(0.05), k(0.4)};
  rs.beta[0][2] = {mu, mu};
  rs.beta[1][2] = {plus(0.01, mu)};
  std::vector<EntryGrid> diag{{{comp(), c(0.3)}, {z(), comp()}}, {{comp()}}, {{z()}}};
  AggregateModel m = AggregateModel::build_from_reset({2, 1, 1}, std::move(diag),
                                                      std::move(rs), {1.0, 0.0});
  m.set_names({"active", "free_policy", "dead"});
  return m;
}

PaymentSpec free_policy_payments() {
  PaymentSpec p = PaymentSpec::zero(3, 60.0, k(0.02));
  p.sojourn[0] = aggmark::PaymentFunction::of_time(k(-0.03));
  p.sojourn[1] = aggmark::PaymentFunction::of_time(k(0.02));
  p.transition[0][1] = aggmark::PaymentFunction::of_time(k(-0.1));
  p.transition[0][2] = aggmark::PaymentFunction::of_time(k(1.0));
  p.transition[1][2] = aggmark::PaymentFunction::of_time(k(1.0));
  return p;
}

aggmark::BehaviourSpec free_policy_behaviour(bool time_varying) {
  aggmark::BehaviourSpec b;
  b.before = {0};
  b.after = {1, 2};
  b.rho[{0, 1}] = time_varying ? ScalarFunction::linear(0.4, 0.01) : k(0.7);
  return b;
}

AggregateModel two_phase_model() {
  EntryGrid e{{comp(), c(0.5), c(1.0), c(0.5)},
              {c(0.2), comp(), c(0.3), c(2.0)},
              {z(), z(), z(), z()},
              {z(), z(), z(), z()}};
  return AggregateModel({2, 2}, std::move(e), {0.7, 0.3});
}

AggregateModel eight_state_model() {
  const ScalarFunction mu = active_mortality();
  const IntensityEntry cm = comp();
  const IntensityEntry zz = z();
  ResetStructure rs;
  rs.beta.assign(3, std::vector<std::vector<ScalarFunction>>(3));
  rs.pi = {{k(0.7), k(0.2), k(0.1)},
           {ScalarFunction::linear(0.4, 0.005), k(0.3), ScalarFunction::linear(0.2, -0.005),
            k(0.1)},
           {k(1.0)}};
  const ScalarFunction onset = disability_onset();
  rs.beta[0][1] = {onset, ScalarFunction::product({k(2.0), onset}),
                   ScalarFunction::product({k(4.0), onset})};
  rs.beta[0][2] = {mu, plus(0.005, mu), plus(0.02, mu)};
  rs.beta[1][0] = {k(1.2), k(0.6), k(0.2), k(0.05)};
  rs.beta[1][2] = {plus(0.05, mu), plus(0.03, mu), plus(0.02, mu), plus(0.02, mu)};
  std::vector<EntryGrid> diag{
      {{cm, c(0.1), zz}, {c(0.05), cm, c(0.1)}, {zz, c(0.05), cm}},
      {{cm, c(0.8), zz, zz}, {zz, cm, c(0.5), zz}, {zz, zz, cm, c(0.3)}, {zz, zz, zz, cm}},
      {{zz}}};
  return AggregateModel::build_from_reset({3, 4, 1}, std::move(diag), std::move(rs),
                                          {0.7, 0.2, 0.1});
}

PaymentSpec eight_state_payments() {
  PaymentSpec p = PaymentSpec::zero(3, 65.0, k(0.02));
  p.sojourn[0] = PaymentFunction::of_time(k(-0.03));
  p.sojourn[1] = PaymentFunction::of_time(k(1.0));
  p.transition[0][1] = PaymentFunction::of_time(k(0.5));
  p.transition[0][2] = PaymentFunction::of_time(k(2.0));
  p.transition[1][2] = PaymentFunction::of_time(ScalarFunction::linear(2.5, -0.02));
  p.declared_duration_independent = true;
  return p;
}

aggmark::Matrix random_generator(int d, double scale, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, scale);
  aggmark::Matrix m = aggmark::Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j)
      if (i != j) m(i, j) = u(gen);
    m(i, i) = -m.row(i).sum();
  }
  return m;
}

}  // namespace fixtures
