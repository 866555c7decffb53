#include <cmath>

#include <gtest/gtest.h>

#include "aggmark/error.hpp"
#include "aggmark/model.hpp"
#include "aggmark/model_io.hpp"
#include "fixtures.hpp"

using namespace aggmark;

namespace {

IntensityEntry c(double v) { return IntensityEntry::of(ScalarFunction::constant(v)); }

std::vector<double> sample_times() { return {0.0, 10.0, 40.0, 64.0}; }

}  // namespace

TEST(Model, Indexing) {
  const auto m = fixtures::disability_model(2);
  EXPECT_EQ(m.macrostates(), 3);
  EXPECT_EQ(m.dimension(), 4);
  EXPECT_EQ(m.offset(2), 3);
  EXPECT_EQ(m.index(1, 1).offset, 2);
  const auto idx = m.index_of(2);
  EXPECT_EQ(idx.macro, 1);
  EXPECT_EQ(idx.micro, 1);
  EXPECT_THROW(m.index(1, 2), DomainError);
}

TEST(Model, ComplementRowsSumToZero) {
  for (int d2 : {1, 2, 3}) {
    const auto m = fixtures::disability_model(d2);
    for (double t : sample_times())
      EXPECT_LT(m.intensity(t).rowwise().sum().cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_TRUE(validate(m, sample_times()).ok());
  }
}

TEST(Model, ResetBlocksAreOuterProducts) {
  const auto m = fixtures::busy_reset_model();
  ASSERT_TRUE(m.has_reset());
  for (double t : {0.0, 3.0, 9.0}) {
    const Matrix blk = m.block(0, 1, t);
    const Matrix expect = m.reset().beta_at(0, 1, t) * m.reset().pi_at(1, t);
    EXPECT_LT((blk - expect).cwiseAbs().maxCoeff(), 1e-15);
  }
  EXPECT_TRUE(m.reset().has_flow(1, 0));
  EXPECT_FALSE(m.reset().has_flow(2, 0));
}

TEST(Model, BlockQueries) {
  const auto m = fixtures::disability_model(2);
  EXPECT_TRUE(m.is_absorbing(2));
  EXPECT_FALSE(m.is_absorbing(0));
  EXPECT_TRUE(m.block_is_zero(2, 0));
  EXPECT_FALSE(m.block_is_zero(1, 0));
  const Matrix b = m.block(1, 2, 40.0);
  EXPECT_EQ(b.rows(), 2);
  EXPECT_EQ(b.cols(), 1);
}

TEST(Model, ValidationFindsViolations) {
  EntryGrid e{{c(-0.5), c(0.3)}, {c(-0.1), c(0.1)}};
  const AggregateModel m({1, 1}, e, {1.0});
  const auto report = validate(m, std::vector<double>{0.0, 1.0});
  ASSERT_FALSE(report.ok());
  bool row = false, neg = false;
  for (const auto& v : report.violations) {
    row = row || v.kind == Violation::Kind::row_sum;
    neg = neg || v.kind == Violation::Kind::negative_off_diagonal;
  }
  EXPECT_TRUE(row);
  EXPECT_TRUE(neg);
  EXPECT_NE(report.summary().find("violation"), std::string::npos);
}

TEST(Model, InitialLawChecked) {
  EntryGrid e{{IntensityEntry::complement(), c(1.0)}, {c(0.0), c(0.0)}};
  const AggregateModel m({1, 1}, e, {0.9});
  const auto report = validate(m, std::vector<double>{0.0});
  ASSERT_FALSE(report.ok());
  EXPECT_EQ(report.violations.front().kind, Violation::Kind::initial_sum);
}

TEST(Model, ComplementOnlyOnDiagonal) {
  EntryGrid e{{c(-1.0), IntensityEntry::complement()}, {c(0.0), c(0.0)}};
  EXPECT_THROW(AggregateModel({1, 1}, e, {1.0}), DomainError);
}

TEST(Model, ExitRate) {
  const auto m = fixtures::disability_model(2);
  const Vector e = exit_rate(m, 1, 50.0);
  EXPECT_NEAR(e[0], 2.0 + 0.05 + fixtures::active_mortality()(50.0), 1e-14);
  EntryGrid bad{{c(-1.0), c(0.5)}, {c(0.0), c(0.0)}};
  const AggregateModel inconsistent({1, 1}, bad, {1.0});
  EXPECT_THROW(exit_rate(inconsistent, 0, 0.0), InconsistentModel);
}

TEST(Model, EntryDistribution) {
  const auto m = fixtures::busy_reset_model();
  EXPECT_EQ(m.entry_distribution(0, 0.0), m.initial());
  const RowVector pi = m.entry_distribution(1, 5.0);
  EXPECT_NEAR(pi[0], 0.65, 1e-15);
  EXPECT_NEAR(pi[1], 0.35, 1e-15);
  const auto general = fixtures::two_block_model();
  EXPECT_THROW(general.entry_distribution(1, 1.0), MisuseError);
  EXPECT_EQ(fixtures::flat_chain().entry_distribution(1, 3.0), RowVector::Ones(1));
}

TEST(Model, SpellDistribution) {
  const auto m = fixtures::disability_model(2);
  const auto g = TimeGrid::uniform(0, 65, 650);
  const RowVector at_start = spell_distribution(m, 1, 40.0, 0.0, g);
  EXPECT_NEAR(at_start[0], 1.0, 1e-15);
  const RowVector later = spell_distribution(m, 1, 40.0, 2.0, g);
  EXPECT_NEAR(later.sum(), 1.0, 1e-14);
  EXPECT_GT(later[1], 0.5);
}

TEST(Model, SemiMarkovRateFlat) {
  const auto m = fixtures::disability_model(1);
  const auto g = TimeGrid::uniform(0, 65, 650);
  EXPECT_NEAR(semi_markov_rate(m, 1, 0, 40.0, 3.0, g), 0.8, 1e-14);
  const auto m2 = fixtures::disability_model(2);
  // recovery falls from 2.0 towards 0.1 with duration
  EXPECT_NEAR(semi_markov_rate(m2, 1, 0, 40.0, 0.0, g), 2.0, 1e-12);
  EXPECT_LT(semi_markov_rate(m2, 1, 0, 40.0, 5.0, g), 0.2);
}

TEST(ModelIo, RoundTrip) {
  for (const auto& m : {fixtures::disability_model(2), fixtures::flat_chain(),
                        fixtures::two_block_model(), fixtures::free_policy_model()}) {
    const auto back = model_from_json(model_to_json(m));
    EXPECT_EQ(back.micro_counts(), m.micro_counts());
    EXPECT_EQ(back.has_reset(), m.has_reset());
    for (double t : {0.0, 20.0, 55.5})
      EXPECT_LT((back.intensity(t) - m.intensity(t)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(ModelIo, SchemaPointers) {
  nlohmann::json doc = model_to_json(fixtures::flat_chain());
  doc["micro_counts"][1] = 0;
  try {
    model_from_json(doc);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.pointer(), "/micro_counts/1");
  }
  doc = model_to_json(fixtures::flat_chain());
  doc["blocks"][1]["entries"][0][0] = "complement";
  try {
    model_from_json(doc);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.pointer().rfind("/blocks/1", 0), 0u) << e.pointer();
  }
  doc = model_to_json(fixtures::flat_chain());
  doc.erase("initial");
  EXPECT_THROW(model_from_json(doc), SchemaError);
}

TEST(ModelIo, ResetWithoutJumpBlocks) {
  const nlohmann::json doc = nlohmann::json::parse(R"({
    "macrostates": 2, "micro_counts": [1, 2], "initial": [1],
    "blocks": [{"from": 2, "to": 2, "entries": [["complement", 0.5], [0, "complement"]]},
               {"from": 1, "to": 1, "entries": [["complement"]]}],
    "reset": {"beta": [{"from": 1, "to": 2, "rates": [0.3]},
                       {"from": 2, "to": 1, "rates": [1.0, 0.2]}],
              "pi": [{"state": 2, "weights": [0.4, 0.6]}]}})");
  const auto m = model_from_json(doc);
  EXPECT_TRUE(m.blocks_from_reset());
  EXPECT_NEAR(m.intensity(0.0)(0, 2), 0.18, 1e-15);
  EXPECT_TRUE(validate(m, std::vector<double>{0.0, 1.0}).ok());
}
