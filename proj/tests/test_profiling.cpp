#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "riskprof/profiling.hpp"
#include "riskprof/roc.hpp"
#include "riskprof/simulate.hpp"

using namespace riskprof;

namespace {

// Brute-force pair counting over the expanded (weight-1) observations.
double pair_count_auc(const std::vector<ScoredOutcome>& scored) {
  std::vector<double> pos, neg;
  for (const auto& s : scored) {
    for (long k = 0; k < s.weight; ++k) (s.label ? pos : neg).push_back(s.score);
  }
  double wins = 0.0;
  for (double p : pos) {
    for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

std::vector<ScoredOutcome> random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(2, 40), levels(1, 8), weight(1, 4);
  const int n = size(rng), distinct = levels(rng);
  std::uniform_int_distribution<int> score(0, distinct - 1);
  std::vector<ScoredOutcome> out;
  for (int i = 0; i < n; ++i) out.push_back({score(rng) / 7.0, (rng() & 1) != 0, weight(rng)});
  out.push_back({score(rng) / 7.0, true, 1});
  out.push_back({score(rng) / 7.0, false, 1});
  return out;
}

std::vector<ScoredOutcome> labelled(std::vector<double> scores, std::vector<int> labels) {
  std::vector<ScoredOutcome> out;
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({scores[i], labels[i] == 1, 1});
  return out;
}

SmoothedRates year_rates(const std::vector<CellCounts>& cells, double a, double b) {
  std::map<std::string, std::size_t> index;
  std::vector<BetaHyper> hypers;
  std::vector<SmoothedCell> smoothed;
  for (const auto& c : cells) {
    if (!index.contains(c.tariff_id)) {
      BetaHyper h;
      h.tariff_id = c.tariff_id;
      h.year = c.year;
      h.kind = c.kind;
      h.alpha = a;
      h.beta = b;
      index[c.tariff_id] = hypers.size();
      hypers.push_back(h);
    }
    const auto& h = hypers[index[c.tariff_id]];
    smoothed.push_back({c, smooth(c.x, c.n, h), index[c.tariff_id]});
  }
  return SmoothedRates(InterceptionKind::Regulated, hypers, smoothed);
}

CellCounts cell(std::string s, std::string t, int year, int x, int n) {
  return {std::move(s), std::move(t), year, InterceptionKind::Regulated, x, n};
}

}  // namespace

TEST(Auc, Examples) {
  EXPECT_EQ(auc(labelled({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})), 1.0);
  EXPECT_EQ(auc(labelled({0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0})), 0.5);
  EXPECT_DOUBLE_EQ(auc(labelled({0.8, 0.7, 0.4, 0.3}, {1, 0, 1, 0})), 0.75);
  EXPECT_EQ(roc_curve(labelled({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})).auc, 1.0);
  EXPECT_EQ(roc_curve(labelled({0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0})).auc, 0.5);
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_THROW(auc(labelled({0.1, 0.2}, {1, 1})), UndefinedAuc);
  EXPECT_THROW(roc_curve(labelled({0.1, 0.2}, {0, 0})), UndefinedAuc);
  EXPECT_THROW(auc(labelled({NAN, 0.2}, {0, 1})), std::invalid_argument);
}

TEST(AucProperty, TrapezoidEqualsMannWhitneyEqualsPairCount) {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto inst = random_instance(rng);
    const double mw = auc(inst);
    const auto curve = roc_curve(inst);
    EXPECT_NEAR(curve.auc, mw, 1e-12);
    EXPECT_NEAR(pair_count_auc(inst), mw, 1e-12);

    ASSERT_GE(curve.points.size(), 2u);
    EXPECT_EQ(curve.points.front().fpr, 0.0);
    EXPECT_EQ(curve.points.front().tpr, 0.0);
    EXPECT_NEAR(curve.points.back().fpr, 1.0, 1e-15);
    EXPECT_NEAR(curve.points.back().tpr, 1.0, 1e-15);
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      EXPECT_GE(curve.points[i].fpr, curve.points[i - 1].fpr);
      EXPECT_GE(curve.points[i].tpr, curve.points[i - 1].tpr);
      area += (curve.points[i].fpr - curve.points[i - 1].fpr) *
              (curve.points[i].tpr + curve.points[i - 1].tpr) / 2.0;
    }
    EXPECT_NEAR(area, curve.auc, 1e-12);
  }
}

TEST(AucProperty, InvariantUnderIncreasingTransform) {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 300; ++rep) {
    auto inst = random_instance(rng);
    const double before = auc(inst);
    for (auto& s : inst) s.score = std::exp(3.0 * s.score) - 7.0;
    EXPECT_NEAR(auc(inst), before, 1e-12);
  }
}

TEST(BuildProfile, VariantsScoreAsDefined) {
  const std::vector<CellCounts> cells{cell("S1", "T1", 2008, 3, 10), cell("S2", "T1", 2008, 0, 10),
                                      cell("S3", "T2", 2008, 2, 10), cell("S4", "T2", 2008, 4, 10)};
  const auto rates = year_rates(cells, 2.0, 8.0);
  const auto eb = build_profile(rates, 2008, ProfileVariant::EbSmoothed);
  EXPECT_DOUBLE_EQ(eb.score("S1", "T1"), 0.25);
  const auto raw = build_profile(rates, 2008, ProfileVariant::TariffSupplierRaw);
  EXPECT_DOUBLE_EQ(raw.score("S2", "T1"), 0.0);
  const auto mean = build_profile(rates, 2008, ProfileVariant::SupplierWithinTariffMean);
  EXPECT_DOUBLE_EQ(mean.score("S3", "T2"), 0.3);
  EXPECT_DOUBLE_EQ(mean.score("S4", "T2"), 0.3);

  bool imputed = false;
  EXPECT_DOUBLE_EQ(eb.score("S9", "T1", &imputed), 0.2);  // tariff prior mean
  EXPECT_TRUE(imputed);
  EXPECT_DOUBLE_EQ(eb.score("S9", "T9", &imputed), 9.0 / 40.0);  // pooled rate
  EXPECT_THROW(build_profile(rates, 2009, ProfileVariant::EbSmoothed), ValidationError);
  EXPECT_THROW(parse_variant("smoothed"), ValidationError);
  EXPECT_EQ(parse_variant("eb-smoothed"), ProfileVariant::EbSmoothed);
}

TEST(EvaluateAcross, CountsAndImputation) {
  const std::vector<CellCounts> y{cell("S1", "T1", 2008, 5, 10), cell("S2", "T1", 2008, 1, 10)};
  const auto profile = build_profile(year_rates(y, 1, 1), 2008, ProfileVariant::TariffSupplierRaw);
  const std::vector<CellCounts> next{cell("S1", "T1", 2009, 4, 6), cell("S2", "T1", 2009, 1, 6),
                                     cell("S7", "T1", 2009, 0, 3)};
  const auto r = evaluate_across(profile, next);
  EXPECT_EQ(r.positives, 5);
  EXPECT_EQ(r.negatives, 10);
  EXPECT_EQ(r.imputed_inspections, 3);
  EXPECT_GT(r.curve.auc, 0.5);
}

TEST(EvaluateWithinTariff, SkipsAndOrientation) {
  const std::vector<CellCounts> y{cell("S1", "T1", 2008, 6, 10), cell("S2", "T1", 2008, 1, 10),
                                  cell("S3", "T2", 2008, 2, 10), cell("S4", "T3", 2008, 1, 10),
                                  cell("S5", "T3", 2008, 1, 10)};
  const auto profile = build_profile(year_rates(y, 1, 1), 2008, ProfileVariant::TariffSupplierRaw);
  const std::vector<CellCounts> next{cell("S1", "T1", 2009, 5, 8), cell("S2", "T1", 2009, 1, 8),
                                     cell("S3", "T2", 2009, 2, 8), cell("S4", "T3", 2009, 0, 5),
                                     cell("S5", "T3", 2009, 0, 5)};
  const auto within = evaluate_within_tariff(profile, next);
  ASSERT_EQ(within.size(), 3u);
  ASSERT_TRUE(within[0].auc);
  EXPECT_GT(*within[0].auc, 0.5);
  EXPECT_EQ(within[0].fails, 6);
  EXPECT_EQ(within[1].skip_reason, "single supplier");
  EXPECT_EQ(within[2].skip_reason, "single outcome class");

  // Across restricted to one tariff equals the within-tariff value.
  std::vector<CellCounts> only_t1{next[0], next[1]};
  EXPECT_NEAR(evaluate_across(profile, only_t1).curve.auc, *within[0].auc, 1e-15);
}

TEST(EvaluateAcross, StableSignalBeatsShuffledLabels) {
  SimConfig c;
  c.suppliers = 150;
  c.tariffs = 10;
  c.years = 2;
  c.consignments_mean = 15;
  c.sigma_supplier = 1.2;
  c.sigma_tariff = 1.0;
  c.seed = 33;
  const auto pathway = generate_pathway(c);
  const auto cells = aggregate(pathway.records, InterceptionKind::Regulated);
  const auto rates = smooth_cells(cells);
  std::vector<CellCounts> next;
  for (const auto& cc : cells) {
    if (cc.year == c.first_year + 1) next.push_back(cc);
  }
  const auto profile = build_profile(rates, c.first_year, ProfileVariant::EbSmoothed);
  const double real = evaluate_across(profile, next).curve.auc;
  EXPECT_GT(real, 0.75);

  // Shuffle outcomes at inspection level: labels independent of the profile.
  std::mt19937_64 rng(2);
  auto scored = score_outcomes(profile, next);
  std::vector<ScoredOutcome> expanded;
  for (const auto& s : scored) {
    for (long k = 0; k < s.weight; ++k) expanded.push_back({s.score, s.label, 1});
  }
  std::vector<bool> labels;
  for (const auto& s : expanded) labels.push_back(s.label);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t i = 0; i < expanded.size(); ++i) expanded[i].label = labels[i];
  EXPECT_NEAR(auc(expanded), 0.5, 0.05);

  // Median within-tariff AUC also beats the shuffled-label median.
  auto shuffled_next = next;
  std::vector<std::pair<int, int>> xn;
  for (const auto& cc : next) xn.push_back({cc.x, cc.n});
  std::shuffle(xn.begin(), xn.end(), rng);
  for (std::size_t i = 0; i < next.size(); ++i) {
    shuffled_next[i].n = xn[i].second;
    shuffled_next[i].x = xn[i].first;
  }
  auto median_auc = [&](const std::vector<CellCounts>& outcomes) {
    std::vector<double> v;
    for (const auto& w : evaluate_within_tariff(profile, outcomes)) {
      if (w.auc) v.push_back(*w.auc);
    }
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  EXPECT_GT(median_auc(next), median_auc(shuffled_next));
}

TEST(ProfileWriters, EmitDisplayColumns) {
  const std::vector<CellCounts> y{cell("S1", "T1", 2008, 5, 10), cell("S2", "T1", 2008, 1, 10)};
  const auto profile = build_profile(year_rates(y, 1, 1), 2008, ProfileVariant::EbSmoothed);
  const std::vector<CellCounts> next{cell("S1", "T1", 2009, 4, 6), cell("S2", "T1", 2009, 1, 6)};
  std::vector<AcrossResult> across{evaluate_across(profile, next)};
  std::ostringstream out;
  write_across(out, across);
  EXPECT_NE(out.str().find("2008,2009,regulated,eb-smoothed,"), std::string::npos);
}
