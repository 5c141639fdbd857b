#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "riskprof/cross_validation.hpp"
#include "riskprof/glmm_report.hpp"
#include "riskprof/loo.hpp"

using namespace riskprof;

namespace {

ModelRow row(std::string s, std::string t, int year, int x, int n, double prev = 0.2) {
  ModelRow r;
  r.supplier_id = std::move(s);
  r.tariff_id = std::move(t);
  r.year = year;
  r.x = x;
  r.n = n;
  r.prev_regulated_rate = prev;
  r.prev_non_regulated_rate = prev;
  r.prev_administrative_rate = prev;
  return r;
}

std::vector<ModelRow> small_rows(std::uint64_t seed, int count, int years = 2) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> s(0, 5), t(0, 3), n(2, 10);
  std::uniform_real_distribution<double> u(0.05, 0.9);
  std::vector<ModelRow> rows;
  for (int i = 0; i < count; ++i) {
    const int ni = n(rng);
    const double p = u(rng);
    std::binomial_distribution<int> bin(ni, p);
    rows.push_back(row("S" + std::to_string(s(rng)), "T" + std::to_string(t(rng)), 2001 + i % years,
                       bin(rng), ni, p));
  }
  return rows;
}

double binomial_log_pmf(int x, int n, double p) {
  return std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0) + x * std::log(p) +
         (n - x) * std::log1p(-p);
}

PointwiseLogLik random_ll(std::mt19937_64& rng, int draws, int n) {
  std::normal_distribution<double> z(-1.0, 0.4);
  PointwiseLogLik ll(draws, n);
  for (int j = 0; j < n; ++j) {
    const double shift = z(rng);
    for (int s = 0; s < draws; ++s) ll(s, j) = shift + 0.3 * z(rng);
  }
  return ll;
}

}  // namespace

TEST(PointwiseLogLik, ZeroPredictorGivesHalf) {
  const std::vector<ModelRow> rows{row("S1", "T1", 2002, 1, 2), row("S2", "T1", 2002, 0, 3)};
  FitConfig cfg;
  cfg.draws = 100;
  auto fit = fit_map(rows, ModelSpec::make(ModelId::Base), Priors{}, cfg, 1);
  fit.draws.setZero();
  const std::vector<ModelRow> one{rows[0]};
  const auto ll = pointwise_loglik(fit, one);
  ASSERT_EQ(ll.rows(), 100);
  ASSERT_EQ(ll.cols(), 1);
  for (Eigen::Index s = 0; s < ll.rows(); ++s) EXPECT_NEAR(ll(s, 0), std::log(0.5), 1e-14);
}

TEST(IsLoo, ConstantLikelihoodHasNoEffectiveParameters) {
  PointwiseLogLik ll(200, 4);
  for (int j = 0; j < 4; ++j) ll.col(j).setConstant(-0.5 * (j + 1));
  const auto r = is_loo(ll, "const");
  EXPECT_NEAR(r.p_eff, 0.0, 1e-12);
  EXPECT_NEAR(r.elpd_loo, -5.0, 1e-12);
  EXPECT_NEAR(r.looic, 10.0, 1e-12);
  EXPECT_NEAR(r.se_looic, 2.0 * r.se_elpd, 1e-12);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(r.pointwise_elpd[j], r.pointwise_lpd[j], 1e-12);
}

TEST(IsLoo, RejectsTooFewDrawsOrRows) {
  EXPECT_THROW(is_loo(PointwiseLogLik::Zero(99, 5)), std::invalid_argument);
  EXPECT_THROW(is_loo(PointwiseLogLik::Zero(200, 1)), std::invalid_argument);
  PointwiseLogLik bad = PointwiseLogLik::Zero(100, 3);
  bad(4, 1) = NAN;
  EXPECT_THROW(is_loo(bad), NumericalError);
}

TEST(IsLoo, InvariantToDrawAndRowPermutation) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto ll = random_ll(rng, 150, 12);
    const auto base = is_loo(ll);
    std::vector<int> draw_order(150), row_order(12);
    std::iota(draw_order.begin(), draw_order.end(), 0);
    std::iota(row_order.begin(), row_order.end(), 0);
    std::shuffle(draw_order.begin(), draw_order.end(), rng);
    std::shuffle(row_order.begin(), row_order.end(), rng);
    PointwiseLogLik permuted(150, 12);
    for (int s = 0; s < 150; ++s) {
      for (int j = 0; j < 12; ++j) permuted(s, j) = ll(draw_order[s], row_order[j]);
    }
    const auto other = is_loo(permuted);
    EXPECT_NEAR(base.elpd_loo, other.elpd_loo, 1e-10);
    EXPECT_NEAR(base.p_eff, other.p_eff, 1e-10);
    EXPECT_NEAR(base.se_elpd, other.se_elpd, 1e-10);
  }
}

TEST(IsLoo, ElpdNeverExceedsLpd) {
  // Harmonic mean <= arithmetic mean, and truncation keeps it so.
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    const auto r = is_loo(random_ll(rng, 120, 8));
    for (int j = 0; j < 8; ++j) EXPECT_LE(r.pointwise_elpd[j], r.pointwise_lpd[j] + 1e-12);
    EXPECT_GE(r.p_eff, -1e-12);
  }
}

TEST(CompareTable, IdenticalInputsGiveZeroDifference) {
  std::mt19937_64 rng(7);
  const auto ll = random_ll(rng, 200, 10);
  const std::vector<LooResult> results{is_loo(ll, "A"), is_loo(ll, "B")};
  const auto table = compare_table(results);
  ASSERT_EQ(table.size(), 2u);
  EXPECT_EQ(table[0].loo.label, "A");
  EXPECT_FALSE(table[0].delta_looic.has_value());
  EXPECT_FALSE(table[0].se_delta.has_value());
  EXPECT_EQ(*table[1].delta_looic, 0.0);
  EXPECT_EQ(*table[1].se_delta, 0.0);
}

TEST(CompareTable, SortedAndOrderInvariant) {
  std::mt19937_64 rng(8);
  std::vector<LooResult> results;
  for (int k = 0; k < 4; ++k) results.push_back(is_loo(random_ll(rng, 200, 15), "m" + std::to_string(k)));
  const auto table = compare_table(results);
  for (std::size_t k = 1; k < table.size(); ++k) {
    EXPECT_LE(table[k - 1].loo.looic, table[k].loo.looic);
    EXPECT_NEAR(*table[k].delta_looic, table[k].loo.looic - table[0].loo.looic, 1e-9);
    EXPECT_GE(*table[k].delta_looic, 0.0);
  }
  std::reverse(results.begin(), results.end());
  const auto again = compare_table(results);
  for (std::size_t k = 0; k < table.size(); ++k) EXPECT_EQ(table[k].loo.label, again[k].loo.label);
  EXPECT_THROW(compare_table(std::span<const LooResult>(results.data(), 1)), std::invalid_argument);

  std::ostringstream out;
  write_comparison(out, table);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "model,looic,se_looic,p_eff,se_p_eff,delta_looic,se_delta,looic_display,"
            "se_looic_display,p_eff_display,se_p_eff_display,delta_looic_display,se_delta_display");
}

TEST(CvPlan, SingleYearFoldSizes) {
  std::vector<ModelRow> rows;
  for (int i = 0; i < 100; ++i) rows.push_back(row("S" + std::to_string(i), "T", 2003, 0, 1));
  const auto plan = make_cv_plan(rows, 5, 3, 9);
  ASSERT_EQ(plan.assignment.size(), 3u);
  EXPECT_EQ(plan.split_count(), 15u);
  for (const auto& a : plan.assignment) {
    std::map<int, int> sizes;
    for (int f : a) sizes[f]++;
    ASSERT_EQ(sizes.size(), 5u);
    for (const auto& [f, c] : sizes) EXPECT_EQ(c, 20);
  }
  EXPECT_NE(plan.assignment[0], plan.assignment[1]);
}

TEST(CvPlan, StratifiedByYear) {
  std::vector<ModelRow> rows;
  for (int i = 0; i < 100; ++i) rows.push_back(row("S" + std::to_string(i), "T", i < 50 ? 2003 : 2004, 0, 1));
  const auto plan = make_cv_plan(rows, 5, 2, 9);
  for (const auto& a : plan.assignment) {
    std::map<std::pair<int, int>, int> sizes;
    for (std::size_t i = 0; i < rows.size(); ++i) sizes[{a[i], rows[i].year}]++;
    ASSERT_EQ(sizes.size(), 10u);
    for (const auto& [k, c] : sizes) EXPECT_EQ(c, 10);
  }
  EXPECT_EQ(make_cv_plan(rows, 5, 2, 9).assignment, plan.assignment);
  EXPECT_NE(make_cv_plan(rows, 5, 2, 10).assignment, plan.assignment);
}

TEST(CvPlan, RejectsSparseYear) {
  std::vector<ModelRow> rows;
  for (int i = 0; i < 20; ++i) rows.push_back(row("S", "T", 2003, 0, 1));
  for (int i = 0; i < 3; ++i) rows.push_back(row("S", "T", 2004, 0, 1));
  EXPECT_THROW(make_cv_plan(rows, 5, 1, 1), ValidationError);
}

TEST(CvEvaluate, OneEntryPerSplitAndLabel) {
  const auto rows = small_rows(11, 60);
  const auto plan = make_cv_plan(rows, 3, 2, 4);
  FitConfig cfg;
  cfg.draws = 100;
  const std::vector<ModelSpec> specs{ModelSpec::make(ModelId::Base)};
  const auto results = cv_evaluate(specs, rows, plan, Priors{}, cfg, 21, 1);
  ASSERT_EQ(results.size(), 2 * plan.split_count());
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    EXPECT_EQ(r.label, k < plan.split_count() ? "Base" : std::string(kEbBaselineLabel));
    EXPECT_EQ(r.repeat, static_cast<int>((k % plan.split_count()) / 3));
    EXPECT_EQ(r.fold, static_cast<int>(k % 3));
    ASSERT_TRUE(r.mean_lpd.has_value()) << r.error;
    EXPECT_LT(*r.mean_lpd, 0.0);
  }
  const auto parallel = cv_evaluate(specs, rows, plan, Priors{}, cfg, 21, 3);
  for (std::size_t k = 0; k < results.size(); ++k) {
    EXPECT_EQ(results[k].mean_lpd, parallel[k].mean_lpd);
    EXPECT_EQ(results[k].auc, parallel[k].auc);
  }
  const auto summary = summarize_cv(results);
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary[0].evaluated, 6);
}

TEST(HeldOutLpd, MatchesInterceptOnlyAnalyticValue) {
  const auto rows = small_rows(12, 40);
  FitConfig cfg;
  cfg.draws = 100;
  auto fit = fit_map(rows, ModelSpec::make(ModelId::Base), Priors{}, cfg, 2);
  const double b0 = -0.4;
  fit.draws.setZero();
  fit.draws.row(0).setConstant(b0);
  const std::vector<ModelRow> test(rows.begin(), rows.begin() + 10);
  double expected = 0.0;
  for (const auto& r : test) expected += binomial_log_pmf(r.x, r.n, 1.0 / (1.0 + std::exp(-b0)));
  expected /= static_cast<double>(test.size());
  EXPECT_NEAR(held_out_mean_lpd(fit, test), expected, 1e-12);
}

TEST(HeldOutLpd, AveragesDensityOverDraws) {
  // The posterior-averaged density is mean_s p_s, not exp(mean_s log p_s).
  const auto rows = small_rows(13, 30);
  FitConfig cfg;
  cfg.draws = 100;
  auto fit = fit_map(rows, ModelSpec::make(ModelId::Base), Priors{}, cfg, 2);
  fit.draws.setZero();
  for (Eigen::Index s = 0; s < fit.draws.cols(); ++s) fit.draws(0, s) = s % 2 == 0 ? -1.0 : 1.0;
  const std::vector<ModelRow> test{rows[0]};
  const auto& r = rows[0];
  const double p1 = 1.0 / (1.0 + std::exp(1.0)), p2 = 1.0 / (1.0 + std::exp(-1.0));
  const double expected =
      std::log(0.5 * std::exp(binomial_log_pmf(r.x, r.n, p1)) + 0.5 * std::exp(binomial_log_pmf(r.x, r.n, p2)));
  EXPECT_NEAR(held_out_mean_lpd(fit, test), expected, 1e-12);
}
