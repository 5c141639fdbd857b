#include "riskprof/glmm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace riskprof {

std::string_view to_string(ModelId id) {
  static constexpr std::array<std::string_view, 7> names{"Base", "M1", "M2", "M3",
                                                         "M4",   "M5", "M6"};
  return names[static_cast<std::size_t>(id)];
}

std::string_view to_string(EffectGroup group) {
  switch (group) {
    case EffectGroup::Supplier: return "supplier";
    case EffectGroup::Tariff: return "tariff";
    case EffectGroup::Year: return "year";
    case EffectGroup::SupplierTariff: return "supplier_tariff";
    case EffectGroup::SupplierYear: return "supplier_year";
  }
  return "unknown";
}

ModelId parse_model_id(std::string_view text) {
  for (auto id : kAllModels) {
    if (to_string(id) == text) return id;
  }
  throw ValidationError("unknown model id '" + std::string(text) + "'");
}

ModelSpec ModelSpec::make(ModelId id) {
  ModelSpec s;
  s.id = id;
  s.groups = {EffectGroup::Supplier, EffectGroup::Tariff};
  if (id == ModelId::Base) return s;
  s.groups.push_back(EffectGroup::Year);
  if (id == ModelId::M1) return s;
  s.groups.push_back(EffectGroup::SupplierTariff);
  if (id == ModelId::M2) return s;
  s.groups.push_back(EffectGroup::SupplierYear);
  switch (id) {
    case ModelId::M4: s.spline = SplineCovariate::PrevRegulated; break;
    case ModelId::M5: s.spline = SplineCovariate::PrevNonRegulated; break;
    case ModelId::M6: s.spline = SplineCovariate::PrevAdministrative; break;
    default: break;
  }
  return s;
}

bool ModelSpec::has_group(EffectGroup g) const { return group_index(g).has_value(); }

std::optional<std::size_t> ModelSpec::group_index(EffectGroup g) const {
  auto it = std::find(groups.begin(), groups.end(), g);
  if (it == groups.end()) return std::nullopt;
  return static_cast<std::size_t>(it - groups.begin());
}

std::string level_key(EffectGroup group, const ModelRow& row) {
  switch (group) {
    case EffectGroup::Supplier: return row.supplier_id;
    case EffectGroup::Tariff: return row.tariff_id;
    case EffectGroup::Year: return std::to_string(row.year);
    case EffectGroup::SupplierTariff: return row.supplier_id + "|" + row.tariff_id;
    case EffectGroup::SupplierYear: return row.supplier_id + "|" + std::to_string(row.year);
  }
  return {};
}

double covariate_value(SplineCovariate covariate, const ModelRow& row) {
  switch (covariate) {
    case SplineCovariate::PrevRegulated: return row.prev_regulated_rate;
    case SplineCovariate::PrevNonRegulated: return row.prev_non_regulated_rate;
    case SplineCovariate::PrevAdministrative: return row.prev_administrative_rate;
    case SplineCovariate::None: break;
  }
  return 0.0;
}

namespace {

void fill_rows(Design& d, std::span<const ModelRow> rows) {
  d.x.clear();
  d.n.clear();
  d.log_choose.clear();
  for (const auto& r : rows) {
    if (r.n < 0 || r.x < 0 || r.x > r.n) throw ValidationError("model row violates 0 <= x <= n");
    d.x.push_back(r.x);
    d.n.push_back(r.n);
    d.log_choose.push_back(boost::math::lgamma(r.n + 1.0) - boost::math::lgamma(r.x + 1.0) -
                           boost::math::lgamma(r.n - r.x + 1.0));
  }
  if (d.spline) {
    std::vector<double> values;
    values.reserve(rows.size());
    for (const auto& r : rows) values.push_back(covariate_value(d.spec.spline, r));
    d.spline_rows = d.spline->matrix(values);
  } else {
    d.spline_rows.resize(static_cast<Eigen::Index>(rows.size()), 0);
  }
}

}  // namespace

Design Design::build(std::span<const ModelRow> rows, const ModelSpec& spec, const Priors& priors) {
  if (rows.empty()) throw ValidationError("model design: no rows");
  Design d;
  d.spec = spec;
  std::size_t offset = 1;
  for (auto g : spec.groups) {
    std::map<std::string, int> levels;
    for (const auto& r : rows) levels.emplace(level_key(g, r), 0);
    std::vector<std::string> names;
    int index = 0;
    for (auto& [key, idx] : levels) {
      idx = index++;
      names.push_back(key);
    }
    std::vector<int> per_row;
    per_row.reserve(rows.size());
    for (const auto& r : rows) per_row.push_back(levels.at(level_key(g, r)));
    d.layout.group_offset.push_back(offset);
    d.layout.group_size.push_back(names.size());
    offset += names.size();
    d.level_names.push_back(std::move(names));
    d.row_level.push_back(std::move(per_row));
  }
  if (spec.spline != SplineCovariate::None) {
    std::vector<double> values;
    for (const auto& r : rows) values.push_back(covariate_value(spec.spline, r));
    auto basis = NaturalCubicBasis::from_quantiles(values, priors.spline_dim, &d.warnings);
    d.spline = CenteredSpline(std::move(basis), values);
  }
  d.layout.spline_offset = offset;
  d.layout.spline_size = d.spline ? static_cast<std::size_t>(d.spline->dimension()) : 0;
  offset += d.layout.spline_size;
  d.layout.sigma_offset = offset;
  d.layout.total = offset + spec.groups.size();
  fill_rows(d, rows);
  return d;
}

int Design::find_level(std::size_t group, const std::string& key) const {
  const auto& names = level_names[group];
  auto it = std::lower_bound(names.begin(), names.end(), key);
  if (it == names.end() || *it != key) return -1;
  return static_cast<int>(it - names.begin());
}

Design Design::project(std::span<const ModelRow> rows) const {
  Design d;
  d.spec = spec;
  d.layout = layout;
  d.level_names = level_names;
  d.spline = spline;
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    std::vector<int> per_row;
    per_row.reserve(rows.size());
    for (const auto& r : rows) per_row.push_back(find_level(g, level_key(spec.groups[g], r)));
    d.row_level.push_back(std::move(per_row));
  }
  fill_rows(d, rows);
  return d;
}

double log1p_exp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double inv_logit(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double student_t_log_density(double x, double df, double scale) {
  const double z = x / scale;
  return boost::math::lgamma(0.5 * (df + 1.0)) - boost::math::lgamma(0.5 * df) -
         0.5 * std::log(df * std::numbers::pi) - std::log(scale) -
         0.5 * (df + 1.0) * std::log1p(z * z / df);
}

namespace {

// d/dx log t(x; df, scale)
double student_t_score(double x, double df, double scale) {
  return -(df + 1.0) * x / (df * scale * scale + x * x);
}

}  // namespace

Eigen::VectorXd linear_predictor(const Eigen::VectorXd& params, const Design& design) {
  const std::size_t n_rows = design.rows();
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_rows), params[0]);
  for (std::size_t g = 0; g < design.row_level.size(); ++g) {
    const auto offset = static_cast<Eigen::Index>(design.layout.group_offset[g]);
    const auto& levels = design.row_level[g];
    for (std::size_t i = 0; i < n_rows; ++i) {
      if (levels[i] >= 0) eta[i] += params[offset + levels[i]];
    }
  }
  if (design.layout.spline_size > 0) {
    eta += design.spline_rows *
           params.segment(static_cast<Eigen::Index>(design.layout.spline_offset),
                          static_cast<Eigen::Index>(design.layout.spline_size));
  }
  return eta;
}

double log_likelihood(const Eigen::VectorXd& params, const Design& design) {
  const Eigen::VectorXd eta = linear_predictor(params, design);
  double ll = 0.0;
  for (std::size_t i = 0; i < design.rows(); ++i) {
    ll += design.log_choose[i] + design.x[i] * eta[i] - design.n[i] * log1p_exp(eta[i]);
  }
  return ll;
}

double log_posterior(const Eigen::VectorXd& params, const Design& design, const Priors& priors,
                     Eigen::VectorXd* gradient) {
  const auto& layout = design.layout;
  if (static_cast<std::size_t>(params.size()) != layout.total) {
    throw std::invalid_argument("log_posterior: parameter vector has the wrong length");
  }
  if (!params.allFinite()) throw NumericalError("log_posterior: non-finite parameter");

  const Eigen::VectorXd eta = linear_predictor(params, design);
  double lp = 0.0;
  Eigen::VectorXd residual(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double xi = design.x[i], ni = design.n[i];
    lp += design.log_choose[i] + xi * eta[i] - ni * log1p_exp(eta[i]);
    residual[i] = xi - ni * inv_logit(eta[i]);
  }
  if (gradient) {
    gradient->setZero(static_cast<Eigen::Index>(layout.total));
    (*gradient)[0] = residual.sum();
    for (std::size_t g = 0; g < design.row_level.size(); ++g) {
      const auto& levels = design.row_level[g];
      const auto offset = layout.group_offset[g];
      for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (levels[i] >= 0) (*gradient)[offset + levels[i]] += residual[i];
      }
    }
    if (layout.spline_size > 0) {
      gradient->segment(layout.spline_offset, layout.spline_size) =
          design.spline_rows.transpose() * residual;
    }
  }

  // Intercept and spline coefficients.
  lp += student_t_log_density(params[0], priors.df, priors.intercept_scale);
  if (gradient) (*gradient)[0] += student_t_score(params[0], priors.df, priors.intercept_scale);
  for (std::size_t j = 0; j < layout.spline_size; ++j) {
    const double c = params[layout.spline_offset + j];
    lp += student_t_log_density(c, priors.df, priors.coef_scale);
    if (gradient) (*gradient)[layout.spline_offset + j] += student_t_score(c, priors.df, priors.coef_scale);
  }

  // Hierarchical level effects and their scales.
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (std::size_t g = 0; g < layout.group_count(); ++g) {
    const double log_sigma = params[layout.sigma_offset + g];
    const double sigma = std::exp(log_sigma);
    const double inv_var = std::exp(-2.0 * log_sigma);
    const auto offset = layout.group_offset[g];
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < layout.group_size[g]; ++j) {
      const double u = params[offset + j];
      sum_sq += u * u;
      if (gradient) (*gradient)[offset + j] -= u * inv_var;
    }
    const double levels = static_cast<double>(layout.group_size[g]);
    lp += -levels * (half_log_2pi + log_sigma) - 0.5 * sum_sq * inv_var;
    lp += std::log(2.0) + student_t_log_density(sigma, priors.sigma_df, priors.sigma_scale) +
          log_sigma;
    if (gradient) {
      (*gradient)[layout.sigma_offset + g] =
          -levels + sum_sq * inv_var +
          sigma * student_t_score(sigma, priors.sigma_df, priors.sigma_scale) + 1.0;
    }
  }
  return lp;
}

}  // namespace riskprof
