#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "riskprof/model_rows.hpp"
#include "riskprof/spline.hpp"

namespace riskprof {

enum class EffectGroup : std::uint8_t { Supplier, Tariff, Year, SupplierTariff, SupplierYear };
enum class SplineCovariate : std::uint8_t { None, PrevRegulated, PrevNonRegulated, PrevAdministrative };
enum class ModelId : std::uint8_t { Base, M1, M2, M3, M4, M5, M6 };

inline constexpr std::array<ModelId, 7> kAllModels{ModelId::Base, ModelId::M1, ModelId::M2,
                                                   ModelId::M3,   ModelId::M4, ModelId::M5,
                                                   ModelId::M6};

std::string_view to_string(ModelId id);
std::string_view to_string(EffectGroup group);
ModelId parse_model_id(std::string_view text);

/// The logit-scale ladder:
///   Base  b0 + supplier + tariff
///   M1    Base + year
///   M2    M1 + supplier x tariff
///   M3    M2 + supplier x year
///   M4-6  M3 + spline of previous-year regulated / non-regulated / administrative rate
struct ModelSpec {
  ModelId id = ModelId::Base;
  std::vector<EffectGroup> groups;
  SplineCovariate spline = SplineCovariate::None;

  static ModelSpec make(ModelId id);
  bool has_group(EffectGroup g) const;
  std::optional<std::size_t> group_index(EffectGroup g) const;
};

/// Prior settings. Student-t scales follow the 10 / 2.5 convention; the
/// degrees of freedom are configuration.
struct Priors {
  double df = 7.0;
  double intercept_scale = 10.0;
  double coef_scale = 2.5;
  double sigma_df = 3.0;
  double sigma_scale = 2.5;
  int spline_dim = 5;
};

/// Key of the level a row belongs to within an effect group.
std::string level_key(EffectGroup group, const ModelRow& row);
double covariate_value(SplineCovariate covariate, const ModelRow& row);

/// Parameter vector layout, fixed for a given (rows, spec):
///   [0]                              intercept b0
///   [group_offset[g], +group_size[g]) level effects of group g, levels in
///                                    sorted key order, groups in spec order
///   [spline_offset, +spline_size)    centered spline coefficients
///   [sigma_offset + g]               log sigma_g, one per group
/// Everything before sigma_offset is the latent block integrated by Laplace.
struct ParamLayout {
  std::vector<std::size_t> group_offset;
  std::vector<std::size_t> group_size;
  std::size_t spline_offset = 0;
  std::size_t spline_size = 0;
  std::size_t sigma_offset = 0;
  std::size_t total = 0;

  std::size_t latent_size() const { return sigma_offset; }
  std::size_t group_count() const { return group_size.size(); }
};

/// Model matrix in index form: per group, the level index of every row
/// (-1 for a level unseen in training).
struct Design {
  ModelSpec spec;
  ParamLayout layout;
  std::vector<std::vector<std::string>> level_names;
  std::vector<std::vector<int>> row_level;
  std::optional<CenteredSpline> spline;
  Eigen::MatrixXd spline_rows;  // N x spline_size
  std::vector<int> x;
  std::vector<int> n;
  std::vector<double> log_choose;
  std::vector<std::string> warnings;

  std::size_t rows() const { return x.size(); }

  /// Levels and spline basis learned from `rows`.
  static Design build(std::span<const ModelRow> rows, const ModelSpec& spec, const Priors& priors);
  /// Same levels and basis applied to other rows.
  Design project(std::span<const ModelRow> rows) const;
  /// Level index by key within group g, or -1.
  int find_level(std::size_t group, const std::string& key) const;
};

/// Binomial log-likelihood (logit link) summed over rows.
double log_likelihood(const Eigen::VectorXd& params, const Design& design);

/// Linear predictor per row; unseen levels contribute zero.
Eigen::VectorXd linear_predictor(const Eigen::VectorXd& params, const Design& design);

/// Log joint density on the unconstrained scale:
///   binomial likelihood + t(df, 0, 10) on b0 + t(df, 0, 2.5) on spline
///   coefficients + Normal(0, sigma_g^2) on level effects + half-t(3, 0, 2.5)
///   on sigma_g with the log-sigma Jacobian.
/// Throws NumericalError on non-finite parameters.
double log_posterior(const Eigen::VectorXd& params, const Design& design, const Priors& priors,
                     Eigen::VectorXd* gradient = nullptr);

double student_t_log_density(double x, double df, double scale);
double log1p_exp(double x);
double inv_logit(double x);

}  // namespace riskprof
