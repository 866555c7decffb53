#include <cmath>

#include <gtest/gtest.h>

#include "aggmark/error.hpp"
#include "aggmark/occprob.hpp"
#include "aggmark/sim.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace aggmark;

namespace {

AggregateModel constant_chain() {
  auto c = [](double v) { return IntensityEntry::of(ScalarFunction::constant(v)); };
  const auto comp = IntensityEntry::complement();
  EntryGrid e{{comp, c(0.3), c(0.1)}, {c(0.5), comp, c(0.2)}, {{}, {}, {}}};
  return AggregateModel({1, 1, 1}, e, {1.0});
}

}  // namespace

TEST(Occprob, SpellStateNormalised) {
  const auto m = fixtures::disability_model(2);
  const auto g = TimeGrid::uniform(0, 65, 650);
  const auto s0 = spell_state(m, 1, 40.0, 0.0, g);
  EXPECT_NEAR(s0.gamma[1], 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(s0.spell_start, 40.0);
  const auto s1 = spell_state(m, 1, 40.0, 1.5, g);
  EXPECT_NEAR(s1.gamma.sum(), 1.0, 1e-14);
  EXPECT_EQ(s1.gamma[0], 0.0);
  EXPECT_THROW(spell_state(m, 1, 40.0, -1.0, g), DomainError);
}

TEST(Occprob, ZeroDurationTailIsTransitionProbability) {
  const auto m = constant_chain();
  const auto g = TimeGrid::uniform(0, 10, 100);
  const Matrix p = oracles::expm(m.intensity(0.0) * 2.5);
  for (int j = 0; j < 3; ++j)
    EXPECT_NEAR(semi_markov_tail(m, 0, 0.0, 3.0, 5.5, 0.0, j, g), p(0, j), 1e-10);
}

TEST(Occprob, FlatChainDurationTail) {
  // P(Z(s) = 0, U(s) > z | Z(t) = 0): either stayed since t (if z < u + s - t),
  // or entered 0 before s - z and stayed.
  const auto m = constant_chain();
  const auto g = TimeGrid::uniform(0, 10, 100);
  const double t = 2.0, s = 5.0, z = 1.0;
  const Matrix p = oracles::expm(m.intensity(0.0) * (s - z - t));
  const double expect = p(0, 0) * std::exp(-0.4 * z);
  EXPECT_NEAR(semi_markov_tail(m, 0, 0.5, t, s, z, 0, g), expect, 1e-10);
}

TEST(Occprob, MonotoneInDuration) {
  const auto m = fixtures::disability_model(2);
  const auto g = TimeGrid::uniform(0, 65, 650);
  double prev = 1.0;
  for (double z : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double v = semi_markov_tail(m, 0, 0.0, 40.0, 50.0, z, 0, g);
    EXPECT_LE(v, prev + 1e-14);
    prev = v;
  }
}

TEST(Occprob, BoundaryAtom) {
  const auto m = constant_chain();
  const auto g = TimeGrid::uniform(0, 10, 100);
  const double t = 2.0, u = 0.5, s = 4.0;
  const double zmax = u + s - t;
  const double atom = boundary_atom(m, 0, u, t, s, 0, g);
  EXPECT_NEAR(atom, std::exp(-0.4 * (s - t)), 1e-12);
  EXPECT_EQ(semi_markov_tail(m, 0, u, t, s, zmax, 0, g), 0.0);
  EXPECT_NEAR(semi_markov_tail(m, 0, u, t, s, zmax - 1e-9, 0, g), atom, 1e-8);
  EXPECT_EQ(boundary_atom(m, 0, u, t, s, 1, g), 0.0);
}

TEST(Occprob, TailMatrixRows) {
  const auto m = fixtures::disability_model(2);
  const auto g = TimeGrid::uniform(0, 65, 650);
  const Matrix tm = tail_matrix(m, 0.0, 40.0, 50.0, 0.0, g);
  ASSERT_EQ(tm.rows(), 3);
  ASSERT_EQ(tm.cols(), 4);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(tm.row(i).sum(), 1.0, 1e-9);
  for (int j = 0; j < 4; ++j)
    EXPECT_NEAR(tm(0, j), semi_markov_tail(m, 0, 0.0, 40.0, 50.0, 0.0, j, g), 1e-14);
}

TEST(Occprob, HistoryMatchesResetForm) {
  const auto m = fixtures::busy_reset_model();
  const auto g = TimeGrid::uniform(0, 10, 100);
  const History h({{1.0, 1}});
  for (int off = 0; off < 4; ++off)
    EXPECT_NEAR(occupation_tail(m, h, 3.0, 6.0, 1.0, off, g),
                semi_markov_tail(m, 1, 2.0, 3.0, 6.0, 1.0, off, g), 1e-12);
}

TEST(Occprob, MonteCarloAgreement) {
  const auto m = fixtures::busy_reset_model();
  const auto g = TimeGrid::uniform(0, 10, 100);
  const double t = 3.0, u = 1.0, s = 6.0, z = 0.5;
  Simulator sim(m, t - u, s);
  const auto c = Conditioning::spell(m, 1, t, u);
  std::vector<TailQuery> q;
  for (int off = 0; off < 4; ++off) q.push_back({s, z, off});
  const auto est = sim.estimate(c, q.size(), occupation_tail_functional(q), 20000, 17);
  for (int off = 0; off < 4; ++off) {
    const double an = semi_markov_tail(m, 1, u, t, s, z, off, g);
    EXPECT_NEAR(est.mean[off], an, 4.0 * est.std_error[off] + 1e-12) << "offset " << off;
  }
}

TEST(Occprob, SurfaceDump) {
  const auto m = fixtures::flat_chain();
  const auto g = TimeGrid::uniform(0, 65, 130);
  const auto tab = tail_surface(m, 40.0, {0.0, 1.0}, {45.0}, {0.0, 2.0}, g);
  EXPECT_EQ(tab.columns(),
            (std::vector<std::string>{"i", "u", "s", "z", "j", "j_micro", "value"}));
  EXPECT_EQ(tab.rows(), 2u * 1u * 2u * 3u * 3u);
}
