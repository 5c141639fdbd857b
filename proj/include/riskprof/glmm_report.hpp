#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "riskprof/glmm_fit.hpp"

namespace riskprof {

/// Linear predictor per draw (rows) and model row (columns). Levels unseen in
/// training get a fresh Normal(0, sigma_g^2) effect per draw, one per distinct
/// level, seeded from the fit seed.
Eigen::MatrixXd linear_predictor_draws(const ModelFit& fit, std::span<const ModelRow> rows);

struct Prediction {
  double mean = 0.0;
  double lower = 0.0;  // 5% quantile
  double upper = 0.0;  // 95% quantile
};

/// Posterior mean probability with a central 90% interval per row.
std::vector<Prediction> predict_prob(const ModelFit& fit, std::span<const ModelRow> rows);

/// Linear-interpolated empirical quantile (type 7) of unsorted values.
double quantile(std::vector<double> values, double p);

struct MarginalEffect {
  std::string level;
  double prob_positive = 0.0;
  double mean = 0.0;
  double lower = 0.0;  // 5%
  double upper = 0.0;  // 95%
};

/// Per-level summaries of the pure group effect (intercept excluded), sorted
/// by decreasing Pr(effect > 0), ties by decreasing mean, then level.
/// Throws std::invalid_argument when the group is not in the fitted spec.
std::vector<MarginalEffect> marginal_effect_summary(const ModelFit& fit, EffectGroup group);

enum class ReportDirection { Top, Bottom };

struct SupplierTariffRow {
  int rank = 0;
  std::string supplier_id;
  std::string tariff_id;
  double prob_positive = 0.0;  // supplier's Pr(effect > 0)
  double mean = 0.0;           // posterior probability, averaged over years
  double lower = 0.0;
  double upper = 0.0;
  /// Observed regulated proportion averaged over years (top), or its
  /// complement (bottom).
  double observed = 0.0;
  int years = 0;
};

/// The `count` highest (Top) or lowest (Bottom) suppliers by Pr(effect > 0),
/// one row per tariff each imports. Needs a model with supplier x tariff
/// effects; count beyond the supplier total is truncated.
std::vector<SupplierTariffRow> supplier_tariff_report(const ModelFit& fit, ReportDirection direction,
                                                      std::size_t count);

void write_marginal(std::ostream& out, std::span<const MarginalEffect> effects);
void write_supplier_tariff(std::ostream& out, std::span<const SupplierTariffRow> rows);
/// MAP values with posterior mean and 90% interval for b0, each log sigma, and
/// the spline coefficients.
void write_parameter_summary(std::ostream& out, const ModelFit& fit);

}  // namespace riskprof
