#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "riskprof/association.hpp"
#include "test_support.hpp"

using namespace riskprof;
using riskprof::testing::record;

TEST(Crosstab, Examples) {
  const std::vector<InspectionRecord> two{record("S", "T", 2008, true, true),
                                          record("S", "T", 2008, false, false)};
  const auto t = crosstab(two, InterceptionKind::NonRegulated);
  EXPECT_EQ(t.a, 1);
  EXPECT_EQ(t.b, 0);
  EXPECT_EQ(t.c, 0);
  EXPECT_EQ(t.d, 1);
  EXPECT_EQ(crosstab(two, InterceptionKind::NonRegulated, 1999).total(), 0);

  const std::vector<InspectionRecord> four{
      record("S", "T", 1, true, true), record("S", "T", 1, false, true),
      record("S", "T", 1, true, false), record("S", "T", 1, false, false)};
  const auto all = crosstab(four, InterceptionKind::NonRegulated);
  EXPECT_EQ(all.a, 1);
  EXPECT_EQ(all.b, 1);
  EXPECT_EQ(all.c, 1);
  EXPECT_EQ(all.d, 1);
}

TEST(Crosstab, UsesRequestedLowKindAndYear) {
  const std::vector<InspectionRecord> rs{record("S", "T", 1, true, false, true),
                                         record("S", "T", 2, true, true, false)};
  const auto adm = crosstab(rs, InterceptionKind::Administrative);
  EXPECT_EQ(adm.a, 1);
  EXPECT_EQ(adm.c, 1);
  const auto y2 = crosstab(rs, InterceptionKind::NonRegulated, 2);
  EXPECT_EQ(y2.a, 1);
  EXPECT_EQ(y2.total(), 1);
  EXPECT_THROW(crosstab(rs, InterceptionKind::Regulated), std::invalid_argument);
  EXPECT_THROW(crosstab(rs, InterceptionKind::Combined), std::invalid_argument);
}

TEST(LogOddsRatio, HandComputedExample) {
  const auto r = log_odds_ratio({10, 90, 5, 895});
  ASSERT_TRUE(r);
  // log((10/90)/(5/895)) and se = sqrt(1/10 + 1/90 + 1/5 + 1/895).
  const double est = std::log(10.0 * 895.0 / (90.0 * 5.0));
  const double se = std::sqrt(0.1 + 1.0 / 90 + 0.2 + 1.0 / 895);
  EXPECT_NEAR(r->estimate, est, 1e-12);
  EXPECT_NEAR(r->ci_low, est - 1.96 * se, 1e-12);
  EXPECT_NEAR(r->ci_high, est + 1.96 * se, 1e-12);
  EXPECT_NEAR(r->estimate, 2.990, 5e-4);
  EXPECT_NEAR(r->ci_low, 1.895, 5e-4);
  EXPECT_NEAR(r->ci_high, 4.085, 5e-4);
  EXPECT_FALSE(r->corrected);
}

TEST(LogOddsRatio, EqualOddsGiveZero) {
  const auto r = log_odds_ratio({10, 90, 20, 180});
  ASSERT_TRUE(r);
  EXPECT_NEAR(r->estimate, 0.0, 1e-14);
}

TEST(LogOddsRatio, ZeroCellCorrection) {
  const auto r = log_odds_ratio({0, 10, 5, 85});
  ASSERT_TRUE(r);
  EXPECT_TRUE(r->corrected);
  EXPECT_NEAR(r->estimate, std::log((0.5 / 10.5) / (5.5 / 85.5)), 1e-12);
}

TEST(LogOddsRatio, EmptyRowOrColumnIsUndefined) {
  EXPECT_FALSE(log_odds_ratio({0, 0, 5, 85}));   // no X=1
  EXPECT_FALSE(log_odds_ratio({0, 10, 0, 85}));  // no Y=1
  EXPECT_FALSE(log_odds_ratio({0, 0, 0, 0}));
}

TEST(LogOddsProperty, ScalingAntisymmetryAndOrdering) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<long> cell(1, 400);
  std::uniform_int_distribution<long> factor(2, 9);
  for (int rep = 0; rep < 1000; ++rep) {
    const TwoByTwo t{cell(rng), cell(rng), cell(rng), cell(rng)};
    const auto base = log_odds_ratio(t);
    ASSERT_TRUE(base);
    EXPECT_LE(base->ci_low, base->estimate);
    EXPECT_LE(base->estimate, base->ci_high);
    const long k = factor(rng);
    EXPECT_NEAR(log_odds_ratio({t.a * k, t.b * k, t.c, t.d})->estimate, base->estimate, 1e-12);
    EXPECT_NEAR(log_odds_ratio({t.a * k, t.b, t.c * k, t.d})->estimate, base->estimate, 1e-12);
    EXPECT_NEAR(log_odds_ratio({t.c, t.d, t.a, t.b})->estimate, -base->estimate, 1e-12);
  }
}

TEST(LogOddsProperty, CoverageUnderIndependence) {
  std::mt19937_64 rng(99);
  std::bernoulli_distribution x(0.3), y(0.2);
  int covered = 0;
  const int replicates = 1000;
  for (int rep = 0; rep < replicates; ++rep) {
    TwoByTwo t;
    for (int i = 0; i < 10000; ++i) {
      const bool xi = x(rng), yi = y(rng);
      (xi ? (yi ? t.a : t.b) : (yi ? t.c : t.d)) += 1;
    }
    const auto r = log_odds_ratio(t);
    ASSERT_TRUE(r);
    if (r->ci_low <= 0.0 && 0.0 <= r->ci_high) ++covered;
  }
  EXPECT_NEAR(covered / static_cast<double>(replicates), 0.95, 0.02);
}

TEST(AssociationTable, OverallAndPerYearForBothKinds) {
  std::mt19937_64 rng(1);
  const auto records = riskprof::testing::random_records(rng, 500, 3, 3, 2005, 3);
  const auto rows = association_table(records);
  EXPECT_EQ(rows.size(), 2u * 4u);
  long overall = 0, yearly = 0;
  for (const auto& r : rows) {
    if (r.low_kind != InterceptionKind::NonRegulated) continue;
    (r.year ? yearly : overall) += r.table.total();
  }
  EXPECT_EQ(overall, 500);
  EXPECT_EQ(yearly, 500);
  std::ostringstream out;
  write_association(out, rows);
  EXPECT_NE(out.str().find("overall,non_regulated"), std::string::npos);
}
