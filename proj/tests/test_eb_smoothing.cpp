#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "riskprof/beta_binomial.hpp"
#include "test_support.hpp"

using namespace riskprof;

namespace {

// Independent log-likelihood: std::lgamma and the textbook Beta-function form.
double oracle_loglik(const std::vector<BinomialCount>& data, double a, double b) {
  auto lbeta = [](double p, double q) { return std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q); };
  double ll = 0.0;
  for (const auto& d : data) {
    ll += std::lgamma(d.n + 1.0) - std::lgamma(d.x + 1.0) - std::lgamma(d.n - d.x + 1.0) +
          lbeta(d.x + a, d.n - d.x + b) - lbeta(a, b);
  }
  return ll;
}

struct GridResult {
  double alpha;
  double beta;
  bool at_edge;
};

// Two-stage grid search over (log a, log b) in [log 0.01, log 100]^2: a
// coarse 161 x 161 grid, then repeated 21 x 21 refinement around the best
// point with a shrinking window.
GridResult grid_oracle(const std::vector<BinomialCount>& data) {
  const double lo = std::log(0.01), hi = std::log(100.0);
  const int coarse = 161;
  const double h = (hi - lo) / (coarse - 1);
  double best = -INFINITY;
  int bi = 0, bj = 0;
  for (int i = 0; i < coarse; ++i) {
    for (int j = 0; j < coarse; ++j) {
      const double v = oracle_loglik(data, std::exp(lo + i * h), std::exp(lo + j * h));
      if (v > best) {
        best = v;
        bi = i;
        bj = j;
      }
    }
  }
  const bool at_edge = bi == 0 || bj == 0 || bi == coarse - 1 || bj == coarse - 1;
  double ca = lo + bi * h, cb = lo + bj * h, span = 2 * h;
  for (int round = 0; round < 40; ++round) {
    double na = ca, nb = cb;
    for (int i = -10; i <= 10; ++i) {
      for (int j = -10; j <= 10; ++j) {
        const double za = std::clamp(ca + span * i / 10.0, lo, hi);
        const double zb = std::clamp(cb + span * j / 10.0, lo, hi);
        const double v = oracle_loglik(data, std::exp(za), std::exp(zb));
        if (v > best) {
          best = v;
          na = za;
          nb = zb;
        }
      }
    }
    ca = na;
    cb = nb;
    span *= 0.5;
  }
  return {std::exp(ca), std::exp(cb), at_edge};
}

std::vector<BinomialCount> overdispersed(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> shape(0.8, 6.0);
  std::uniform_int_distribution<int> count(15, 30), trials(15, 40);
  const double a = shape(rng), b = shape(rng);
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  std::vector<BinomialCount> data;
  const int k = count(rng);
  for (int i = 0; i < k; ++i) {
    const double x = ga(rng), y = gb(rng);
    const int n = trials(rng);
    std::binomial_distribution<int> bin(n, x / (x + y));
    data.push_back({bin(rng), n});
  }
  return data;
}

}  // namespace

TEST(BetaBinomialPmf, Examples) {
  EXPECT_NEAR(betabinom_log_pmf(1, 1, 1.0, 1.0), std::log(0.5), 1e-14);
  EXPECT_EQ(betabinom_log_pmf(0, 0, 3.0, 4.0), 0.0);
  EXPECT_NEAR(betabinom_log_pmf(1, 2, 2.0, 2.0), std::log(0.4), 1e-14);
  EXPECT_NEAR(betabinom_log_pmf(1, 2, 2.0, 2.0), -0.91629, 1e-5);
}

TEST(BetaBinomialPmf, RejectsBadArguments) {
  EXPECT_THROW(betabinom_log_pmf(3, 2, 1, 1), std::invalid_argument);
  EXPECT_THROW(betabinom_log_pmf(-1, 2, 1, 1), std::invalid_argument);
  EXPECT_THROW(betabinom_log_pmf(1, 2, 0, 1), std::invalid_argument);
  EXPECT_THROW(betabinom_log_pmf(1, 2, 1, -2), std::invalid_argument);
}

TEST(BetaBinomialPmf, NormalizesOverGrid) {
  const double grid[] = {1e-3, 0.05, 0.5, 1.0, 2.5, 10.0, 100.0, 1e4, 1e6};
  for (int n = 0; n <= 50; ++n) {
    for (double a : grid) {
      for (double b : grid) {
        double total = 0.0;
        for (int k = 0; k <= n; ++k) total += std::exp(betabinom_log_pmf(k, n, a, b));
        ASSERT_NEAR(total, 1.0, 1e-10) << "n=" << n << " a=" << a << " b=" << b;
      }
    }
  }
}

TEST(BetaBinomialPmf, MatchesIndependentFormula) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 5);
  for (int rep = 0; rep < 200; ++rep) {
    const double a = std::exp(u(rng)), b = std::exp(u(rng));
    const int n = static_cast<int>(rng() % 40);
    const int k = n == 0 ? 0 : static_cast<int>(rng() % (n + 1));
    EXPECT_NEAR(betabinom_log_pmf(k, n, a, b), oracle_loglik({{k, n}}, a, b), 1e-9);
  }
}

TEST(BetaBinomialLoglik, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const auto data = overdispersed(rng);
    const double za = std::log(0.5 + rep * 0.3), zb = std::log(1.0 + rep * 0.7);
    double ga = 0, gb = 0;
    betabinom_loglik(data, std::exp(za), std::exp(zb), &ga, &gb);
    const double h = 1e-6;
    const double fa = (betabinom_loglik(data, std::exp(za + h), std::exp(zb)) -
                       betabinom_loglik(data, std::exp(za - h), std::exp(zb))) / (2 * h);
    const double fb = (betabinom_loglik(data, std::exp(za), std::exp(zb + h)) -
                       betabinom_loglik(data, std::exp(za), std::exp(zb - h))) / (2 * h);
    EXPECT_NEAR(ga, fa, 1e-5 * std::max(1.0, std::abs(fa)));
    EXPECT_NEAR(gb, fb, 1e-5 * std::max(1.0, std::abs(fb)));
  }
}

TEST(FitBetaBinomial, MatchesGridOracleOnRandomDatasets) {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int attempt = 0; attempt < 60 && checked < 25; ++attempt) {
    const auto data = overdispersed(rng);
    const auto fit = fit_beta_binomial(data);
    const auto oracle = grid_oracle(data);
    if (!fit.converged || oracle.at_edge) continue;
    ++checked;
    EXPECT_NEAR(fit.alpha / oracle.alpha, 1.0, 1e-3) << "attempt " << attempt;
    EXPECT_NEAR(fit.beta / oracle.beta, 1.0, 1e-3) << "attempt " << attempt;
    EXPECT_LE(fit.gradient_norm, 1e-6);
    EXPECT_GE(fit.log_likelihood, fit.initial_log_likelihood);
  }
  EXPECT_GE(checked, 20);
}

TEST(FitBetaBinomial, UnderdispersedTripleRunsToBoundary) {
  // Between-supplier spread below binomial noise: the likelihood keeps rising
  // toward the binomial limit, so no interior optimum exists.
  const std::vector<BinomialCount> data{{1, 10}, {2, 10}, {3, 10}};
  const auto fit = fit_beta_binomial(data);
  EXPECT_FALSE(fit.converged);
  EXPECT_TRUE(grid_oracle(data).at_edge);
  EXPECT_NEAR(fit.prior_mean(), 0.2, 1e-3);
  EXPECT_GE(fit.log_likelihood, fit.initial_log_likelihood);
}

TEST(FitBetaBinomial, DegenerateCasesAreFlagged) {
  const auto single = fit_beta_binomial(std::vector<BinomialCount>{{5, 10}});
  EXPECT_FALSE(single.converged);
  EXPECT_GE(single.alpha, BetaHyper::kMin);
  EXPECT_LE(single.beta, BetaHyper::kMax);

  const auto zeros = fit_beta_binomial(std::vector<BinomialCount>{{0, 10}, {0, 10}, {0, 10}});
  EXPECT_FALSE(zeros.converged);
  EXPECT_NEAR(zeros.alpha, BetaHyper::kMin, 1e-9);

  EXPECT_THROW(fit_beta_binomial(std::vector<BinomialCount>{{0, 0}}), std::invalid_argument);
}

TEST(Smooth, Examples) {
  BetaHyper h;
  h.alpha = 2;
  h.beta = 8;
  EXPECT_DOUBLE_EQ(smooth(3, 10, h), 0.25);
  EXPECT_DOUBLE_EQ(smooth(0, 0, h), 0.2);
  h.alpha = 1;
  h.beta = 1;
  EXPECT_DOUBLE_EQ(smooth(10, 10, h), 11.0 / 12.0);
  EXPECT_THROW(smooth(11, 10, h), std::invalid_argument);
}

TEST(SmoothProperty, ShrinkageMonotonicityAndLimit) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-4, 6);
  for (int rep = 0; rep < 500; ++rep) {
    BetaHyper h;
    h.alpha = std::exp(u(rng));
    h.beta = std::exp(u(rng));
    const int n = 1 + static_cast<int>(rng() % 60);
    const double prior = h.prior_mean();
    double previous = -1.0;
    for (int x = 0; x <= n; ++x) {
      const double p = smooth(x, n, h);
      const double raw = static_cast<double>(x) / n;
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
      EXPECT_GE(p, std::min(raw, prior) - 1e-15);
      EXPECT_LE(p, std::max(raw, prior) + 1e-15);
      EXPECT_GT(p, previous);
      previous = p;
    }
  }
  BetaHyper h;
  h.alpha = 3;
  h.beta = 5;
  EXPECT_NEAR(smooth(300000000, 1000000000, h), 0.3, 1e-8);
}

TEST(SmoothCells, DeterministicAcrossWorkersAndRoundTrips) {
  std::mt19937_64 rng(4);
  const auto records = riskprof::testing::random_records(rng, 3000, 15, 5, 2001, 3);
  const auto cells = aggregate(records, InterceptionKind::Combined);
  const auto one = smooth_cells(cells, 1);
  const auto four = smooth_cells(cells, 4);
  std::ostringstream a_h, a_s, b_h, b_s;
  write_hypers(a_h, one.hypers());
  write_smoothed(a_s, one);
  write_hypers(b_h, four.hypers());
  write_smoothed(b_s, four);
  EXPECT_EQ(a_h.str(), b_h.str());
  EXPECT_EQ(a_s.str(), b_s.str());

  for (const auto& c : one.cells()) {
    const auto& h = one.hypers()[c.hyper_index];
    EXPECT_EQ(c.rate, (c.cell.x + h.alpha) / (c.cell.n + h.alpha + h.beta));
  }

  std::istringstream hin(a_h.str()), sin(a_s.str());
  const auto back = read_smoothed(hin, sin, InterceptionKind::Combined);
  ASSERT_EQ(back.cells().size(), one.cells().size());
  for (std::size_t i = 0; i < back.cells().size(); ++i) {
    EXPECT_EQ(back.cells()[i].rate, one.cells()[i].rate);
  }
  EXPECT_EQ(back.pooled_rate(2002), one.pooled_rate(2002));
  EXPECT_THROW(back.pooled_rate(1999), ValidationError);
}
