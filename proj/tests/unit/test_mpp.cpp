#include <cmath>

#include <gtest/gtest.h>

#include "aggmark/error.hpp"
#include "aggmark/mpp.hpp"
#include "aggmark/sim.hpp"
#include "fixtures.hpp"

using namespace aggmark;

namespace {

// Constant-rate three-state chain.
AggregateModel constant_chain() {
  auto c = [](double v) { return IntensityEntry::of(ScalarFunction::constant(v)); };
  const auto comp = IntensityEntry::complement();
  EntryGrid e{{comp, c(0.3), c(0.1)}, {c(0.5), comp, c(0.2)}, {{}, {}, {}}};
  return AggregateModel({1, 1, 1}, e, {1.0});
}

}  // namespace

TEST(History, Invariants) {
  const History h({{1.0, 1}, {2.5, 0}});
  EXPECT_EQ(h.n(), 2u);
  EXPECT_EQ(h.last_state(), 0);
  EXPECT_DOUBLE_EQ(h.last_time(), 2.5);
  EXPECT_THROW(History({{1.0, 1}, {0.5, 0}}), DomainError);
  EXPECT_THROW(History({{1.0, 0}}), DomainError);
  EXPECT_EQ(h.extended(3.0, 2).n(), 3u);
}

TEST(History, FromPath) {
  const auto m = fixtures::busy_reset_model();
  const SimPath p = sample_path(m, 10.0, 5);
  const History h = History::from_path(p, 10.0);
  const auto ev = p.macro_events();
  EXPECT_EQ(h.n() + 1, ev.size());
  for (std::size_t i = 0; i < ev.size(); ++i) EXPECT_EQ(h.states()[i], ev[i].macro);
}

TEST(Alpha, FlatChainClosedForm) {
  const auto m = constant_chain();
  const auto g = TimeGrid::uniform(0, 10, 100);
  const History h({{1.0, 1}, {3.0, 0}});
  const AlphaVector a = alpha(m, h, g);
  const double expect = std::exp(-0.4 * 1.0) * 0.3 * std::exp(-0.7 * 2.0) * 0.5;
  EXPECT_NEAR(std::exp(a.log_mass()), expect, 1e-12);
}

TEST(Alpha, ImpossibleHistory) {
  const auto m = constant_chain();
  const auto g = TimeGrid::uniform(0, 10, 100);
  EXPECT_THROW(alpha(m, History({{1.0, 2}, {2.0, 0}}), g), ImpossibleHistory);
}

TEST(Alpha, ResetFractionOnSimulatedHistories) {
  const auto m = fixtures::busy_reset_model();
  const auto g = TimeGrid::uniform(0, 10, 100);
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const SimPath p = sample_path(m, 10.0, seed);
    const History h = History::from_path(p, 10.0);
    if (h.n() == 0) continue;
    const RowVector a = alpha(m, h, g).normalized();
    const RowVector pi = m.entry_distribution(h.last_state(), h.last_time());
    EXPECT_LT((a - pi).cwiseAbs().maxCoeff(), 1e-10);
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(Mpp, SojournSurvivalAndMarks) {
  const auto m = constant_chain();
  const auto g = TimeGrid::uniform(0, 10, 100);
  const History h({{1.0, 1}});
  EXPECT_NEAR(sojourn_survival(m, h, 2.5, g), std::exp(-0.7 * 1.5), 1e-10);
  const Vector marks = mark_distribution(m, h, 2.5, g);
  EXPECT_NEAR(marks[0], 0.5 / 0.7, 1e-14);
  EXPECT_NEAR(marks[2], 0.2 / 0.7, 1e-14);
  EXPECT_EQ(marks[1], 0.0);
  EXPECT_THROW(mark_distribution(m, History({{1.0, 2}}), 2.0, g), NoJumpPossible);
  EXPECT_THROW(sojourn_survival(m, h, 0.5, g), DomainError);
}

TEST(Mpp, CompensatorIntensity) {
  const auto m = constant_chain();
  const auto g = TimeGrid::uniform(0, 10, 100);
  const History h({{1.0, 1}});
  EXPECT_NEAR(compensator_intensity(m, h, 1, 0, 2.0, g), 0.5, 1e-14);
  EXPECT_EQ(compensator_intensity(m, h, 0, 1, 2.0, g), 0.0);
  EXPECT_THROW(compensator_intensity(m, h, 1, 1, 2.0, g), DomainError);
  // two microstates: the intensity drifts as the slow phase takes over
  const auto r = fixtures::busy_reset_model();
  const History hr({{1.0, 1}});
  const double early = compensator_intensity(r, hr, 1, 0, 1.01, g);
  const double late = compensator_intensity(r, hr, 1, 0, 6.0, g);
  EXPECT_GT(early, late);
}

TEST(Mpp, SojournRepresentationMatchesSurvival) {
  const auto m = fixtures::busy_reset_model();
  const auto g = TimeGrid::uniform(0, 10, 100);
  const History h({{2.0, 1}});
  const auto rep = sojourn_representation(m, h, g);
  const auto gs = g.shifted(2.0);
  for (double x : {0.5, 1.0, 3.0})
    EXPECT_NEAR(iph_survival(rep, x, gs), sojourn_survival(m, h, 2.0 + x, g), 1e-12);
}

TEST(Mpp, CumulativeCompensatorFlat) {
  const auto m = constant_chain();
  SimPath p;
  p.start_time = 0.0;
  p.horizon = 10.0;
  p.events = {{0.0, 0, 0, 0}, {2.0, 1, 0, 1}, {5.0, 0, 0, 0}};
  std::vector<double> checkpoints{1.0, 3.0, 6.0};
  const auto lam = cumulative_compensator(m, p, 0, 1, checkpoints, 0.05);
  EXPECT_NEAR(lam[0], 0.3, 1e-12);
  EXPECT_NEAR(lam[1], 0.6, 1e-12);
  EXPECT_NEAR(lam[2], 0.9, 1e-12);
  const auto back = cumulative_compensator(m, p, 1, 0, checkpoints, 0.05);
  EXPECT_NEAR(back[2], 1.5, 1e-12);
}

TEST(Mpp, SmallHFirstOrderTerm) {
  const auto m = constant_chain();
  const auto g = TimeGrid::uniform(0, 10, 100);
  const History h({{1.0, 1}});
  const auto r = small_h_identity_check(m, h, 2, 0, 2.0, 0.01, g);
  EXPECT_NEAR(r.rhs, std::exp(-0.7) * 0.2 * 0.01, 1e-12);
  EXPECT_EQ(r.lhs, 0.0);
  const auto sim = small_h_identity_check(m, h, 2, 0, 2.0, 0.05, g, 40000, 3);
  EXPECT_NEAR(sim.lhs, std::exp(-0.7) * (1 - std::exp(-0.7 * 0.05)) * 0.2 / 0.7,
              4.0 * sim.lhs_std_error);
}
