#include "riskprof/cross_validation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <random>

#include "riskprof/csv.hpp"
#include "riskprof/glmm_report.hpp"
#include "riskprof/loo.hpp"
#include "riskprof/parallel.hpp"
#include "riskprof/roc.hpp"

namespace riskprof {

CvPlan make_cv_plan(std::span<const ModelRow> rows, int folds, int repeats, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("cv: folds must be at least 2");
  if (repeats < 1) throw ValidationError("cv: repeats must be at least 1");
  std::map<int, std::vector<int>> by_year;
  for (std::size_t i = 0; i < rows.size(); ++i) by_year[rows[i].year].push_back(static_cast<int>(i));
  if (by_year.empty()) throw ValidationError("cv: no rows");
  for (const auto& [year, idx] : by_year) {
    if (static_cast<int>(idx.size()) < folds) {
      throw ValidationError("cv: year " + std::to_string(year) + " has " +
                            std::to_string(idx.size()) + " rows, fewer than " +
                            std::to_string(folds) + " folds");
    }
  }
  CvPlan plan;
  plan.folds = folds;
  plan.repeats = repeats;
  plan.seed = seed;
  std::mt19937_64 rng(seed);
  for (int r = 0; r < repeats; ++r) {
    std::vector<int> assign(rows.size(), -1);
    // Carry the dealing position across years so remainders spread over folds.
    int next = 0;
    for (const auto& [year, idx] : by_year) {
      std::vector<int> order = idx;
      std::shuffle(order.begin(), order.end(), rng);
      for (int i : order) {
        assign[i] = next;
        next = (next + 1) % folds;
      }
    }
    plan.assignment.push_back(std::move(assign));
  }
  return plan;
}

double held_out_mean_lpd(const ModelFit& fit, std::span<const ModelRow> test) {
  const PointwiseLogLik ll = pointwise_loglik(fit, test);
  const double log_s = std::log(static_cast<double>(ll.rows()));
  double total = 0.0;
  std::vector<double> column(static_cast<std::size_t>(ll.rows()));
  for (Eigen::Index i = 0; i < ll.cols(); ++i) {
    for (Eigen::Index s = 0; s < ll.rows(); ++s) column[s] = ll(s, i);
    total += log_sum_exp(column) - log_s;
  }
  return total / static_cast<double>(ll.cols());
}

namespace {

std::vector<ScoredOutcome> expand(std::span<const ModelRow> test, std::span<const double> scores) {
  std::vector<ScoredOutcome> out;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test[i].x > 0) out.push_back({scores[i], true, test[i].x});
    if (test[i].n > test[i].x) out.push_back({scores[i], false, test[i].n - test[i].x});
  }
  return out;
}

double binomial_log_pmf(int x, int n, double p) {
  const double lc = std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0);
  return lc + (x > 0 ? x * std::log(p) : 0.0) + (n > x ? (n - x) * std::log1p(-p) : 0.0);
}

std::uint64_t task_seed(std::uint64_t seed, std::size_t spec, std::size_t split) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(spec), static_cast<std::uint32_t>(split)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

std::vector<CvSplitResult> cv_evaluate(std::span<const ModelSpec> specs,
                                       std::span<const ModelRow> rows, const CvPlan& plan,
                                       const Priors& priors, const FitConfig& config,
                                       std::uint64_t seed, int workers) {
  for (const auto& a : plan.assignment) {
    if (a.size() != rows.size()) throw std::invalid_argument("cv_evaluate: plan does not match rows");
  }
  const std::size_t splits = plan.split_count();
  const std::size_t labels = specs.size() + 1;
  std::vector<CvSplitResult> results(labels * splits);

  parallel_for(labels * splits, workers, [&](std::size_t task) {
    const std::size_t label = task / splits;
    const std::size_t split = task % splits;
    const int repeat = static_cast<int>(split) / plan.folds;
    const int fold = static_cast<int>(split) % plan.folds;
    CvSplitResult& res = results[task];
    res.label = label < specs.size() ? std::string(to_string(specs[label].id))
                                     : std::string(kEbBaselineLabel);
    res.repeat = repeat;
    res.fold = fold;

    std::vector<ModelRow> train, test;
    const auto& assign = plan.assignment[repeat];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      (assign[i] == fold ? test : train).push_back(rows[i]);
    }
    try {
      std::vector<double> scores(test.size());
      if (label < specs.size()) {
        const ModelFit fit =
            fit_map(train, specs[label], priors, config, task_seed(seed, label, split));
        res.mean_lpd = held_out_mean_lpd(fit, test);
        const auto pred = predict_prob(fit, test);
        for (std::size_t i = 0; i < test.size(); ++i) scores[i] = pred[i].mean;
      } else {
        double total = 0.0;
        for (std::size_t i = 0; i < test.size(); ++i) {
          const double p = std::clamp(test[i].prev_regulated_rate, 1e-12, 1.0 - 1e-12);
          scores[i] = test[i].prev_regulated_rate;
          total += binomial_log_pmf(test[i].x, test[i].n, p);
        }
        res.mean_lpd = total / static_cast<double>(test.size());
      }
      try {
        res.auc = auc(expand(test, scores));
      } catch (const UndefinedAuc& e) {
        res.error = e.what();
      }
    } catch (const std::exception& e) {
      res.mean_lpd.reset();
      res.auc.reset();
      res.error = e.what();
    }
  });
  return results;
}

namespace {

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<CvSummary> summarize_cv(std::span<const CvSplitResult> results) {
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> values;
  std::map<std::string, int> failed;
  for (const auto& r : results) {
    if (!values.contains(r.label)) order.push_back(r.label);
    auto& [lpd, aucs] = values[r.label];
    if (r.mean_lpd) lpd.push_back(*r.mean_lpd);
    else ++failed[r.label];
    if (r.auc) aucs.push_back(*r.auc);
  }
  std::vector<CvSummary> out;
  for (const auto& label : order) {
    const auto& [lpd, aucs] = values[label];
    CvSummary s;
    s.label = label;
    s.evaluated = static_cast<int>(lpd.size());
    s.failed = failed[label];
    if (!lpd.empty()) {
      s.mean_lpd_mean = mean(lpd);
      s.mean_lpd_median = median(lpd);
    }
    s.auc_evaluated = static_cast<int>(aucs.size());
    if (!aucs.empty()) {
      s.auc_mean = mean(aucs);
      s.auc_median = median(aucs);
    }
    out.push_back(s);
  }
  return out;
}

void write_cv_splits(std::ostream& out, std::span<const CvSplitResult> results) {
  csv::Writer w(out);
  w.row({"spec", "repeat", "fold", "mean_lpd", "auc", "auc_display", "error"});
  for (const auto& r : results) {
    w.row({r.label, std::to_string(r.repeat), std::to_string(r.fold),
           r.mean_lpd ? format_double(*r.mean_lpd) : "", r.auc ? format_double(*r.auc) : "",
           r.auc ? format_fixed(*r.auc, 3) : "", r.error});
  }
}

void write_cv_summary(std::ostream& out, std::span<const CvSummary> summaries) {
  csv::Writer w(out);
  w.row({"spec", "splits_evaluated", "splits_failed", "mean_lpd_mean", "mean_lpd_median",
         "auc_evaluated", "auc_mean", "auc_median", "auc_median_display"});
  for (const auto& s : summaries) {
    w.row({s.label, std::to_string(s.evaluated), std::to_string(s.failed),
           format_double(s.mean_lpd_mean), format_double(s.mean_lpd_median),
           std::to_string(s.auc_evaluated), format_double(s.auc_mean),
           format_double(s.auc_median), format_fixed(s.auc_median, 3)});
  }
}

}  // namespace riskprof
