#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskprof/glmm_fit.hpp"

namespace riskprof {

/// Row-to-fold assignments for repeated k-fold CV, stratified by year.
struct CvPlan {
  int folds = 5;
  int repeats = 20;
  std::uint64_t seed = 0;
  /// assignment[r][i] is the fold of row i in repeat r.
  std::vector<std::vector<int>> assignment;

  std::size_t split_count() const { return static_cast<std::size_t>(folds * repeats); }
};

/// Within each repeat and year, rows are shuffled and dealt round-robin to
/// folds, so fold sizes inside a year differ by at most one. Throws
/// ValidationError when a year has fewer than `folds` rows.
CvPlan make_cv_plan(std::span<const ModelRow> rows, int folds, int repeats, std::uint64_t seed);

inline constexpr std::string_view kEbBaselineLabel = "eb-baseline";

struct CvSplitResult {
  std::string label;  // model id or kEbBaselineLabel
  int repeat = 0;
  int fold = 0;
  std::optional<double> mean_lpd;
  std::optional<double> auc;
  std::string error;  // non-empty when the split failed for this label
};

struct CvSummary {
  std::string label;
  int evaluated = 0;
  int failed = 0;
  double mean_lpd_mean = 0.0;
  double mean_lpd_median = 0.0;
  int auc_evaluated = 0;
  double auc_mean = 0.0;
  double auc_median = 0.0;
};

/// Held-out mean log predictive density (posterior-averaged per row, averaged
/// over rows) and per-inspection AUC of the predicted probabilities, for each
/// spec on each split, plus the EB baseline scored by the previous-year
/// regulated rate. Failures are recorded per split. Results are ordered by
/// label (specs in the given order, baseline last), then repeat, then fold.
std::vector<CvSplitResult> cv_evaluate(std::span<const ModelSpec> specs,
                                       std::span<const ModelRow> rows, const CvPlan& plan,
                                       const Priors& priors, const FitConfig& config,
                                       std::uint64_t seed, int workers = 1);

/// Held-out mean lpd of a fit on test rows.
double held_out_mean_lpd(const ModelFit& fit, std::span<const ModelRow> test);

std::vector<CvSummary> summarize_cv(std::span<const CvSplitResult> results);

void write_cv_splits(std::ostream& out, std::span<const CvSplitResult> results);
void write_cv_summary(std::ostream& out, std::span<const CvSummary> summaries);

}  // namespace riskprof
