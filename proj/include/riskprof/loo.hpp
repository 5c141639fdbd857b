#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "riskprof/glmm_fit.hpp"

namespace riskprof {

/// Draws x rows matrix of per-row binomial log-likelihoods.
using PointwiseLogLik = Eigen::MatrixXd;

PointwiseLogLik pointwise_loglik(const ModelFit& fit, std::span<const ModelRow> rows);

struct LooResult {
  std::string label;
  double elpd_loo = 0.0;
  double se_elpd = 0.0;
  double looic = 0.0;
  double se_looic = 0.0;
  double p_eff = 0.0;
  double se_p_eff = 0.0;
  std::vector<double> pointwise_elpd;
  std::vector<double> pointwise_lpd;
};

/// Truncated importance-sampling LOO: raw weights 1/p(y_i | draw) capped at
/// mean weight * S^(3/4), self-normalized. Needs S >= 100 draws and at least
/// two rows (for the standard errors); throws std::invalid_argument otherwise.
LooResult is_loo(const PointwiseLogLik& ll, std::string label = {});

struct ComparisonRow {
  LooResult loo;
  /// Empty for the best (first) row.
  std::optional<double> delta_looic;
  std::optional<double> se_delta;
};

/// Sorted by increasing LOOIC; differences against the best model.
std::vector<ComparisonRow> compare_table(std::span<const LooResult> results);

void write_comparison(std::ostream& out, std::span<const ComparisonRow> rows);

double log_sum_exp(std::span<const double> values);

}  // namespace riskprof
