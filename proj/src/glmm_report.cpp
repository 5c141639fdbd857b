#include "riskprof/glmm_report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>

#include "riskprof/csv.hpp"

namespace riskprof {

namespace {
constexpr std::uint64_t kUnseenStream = 0x9e3779b97f4a7c15ULL;
}

Eigen::MatrixXd linear_predictor_draws(const ModelFit& fit, std::span<const ModelRow> rows) {
  const Design projected = fit.design.project(rows);
  const auto& layout = projected.layout;
  const auto draws = static_cast<Eigen::Index>(fit.draw_count());
  const auto n_rows = static_cast<Eigen::Index>(rows.size());

  // Fresh effects for unseen levels, keyed by (group, level key).
  std::map<std::pair<std::size_t, std::string>, Eigen::Index> unseen;
  for (std::size_t g = 0; g < layout.group_count(); ++g) {
    for (Eigen::Index i = 0; i < n_rows; ++i) {
      if (projected.row_level[g][i] < 0) {
        unseen.emplace(std::pair{g, level_key(fit.spec.groups[g], rows[i])}, 0);
      }
    }
  }
  Eigen::Index next = 0;
  for (auto& [key, index] : unseen) index = next++;
  Eigen::MatrixXd fresh(draws, next);
  if (next > 0) {
    std::mt19937_64 rng(fit.seed ^ kUnseenStream);
    std::normal_distribution<double> normal;
    for (auto& [key, index] : unseen) {
      const auto sigma_row = static_cast<Eigen::Index>(layout.sigma_offset + key.first);
      for (Eigen::Index s = 0; s < draws; ++s) {
        fresh(s, index) = std::exp(fit.draws(sigma_row, s)) * normal(rng);
      }
    }
  }

  Eigen::MatrixXd eta(draws, n_rows);
  for (Eigen::Index s = 0; s < draws; ++s) {
    eta.row(s) = linear_predictor(fit.draws.col(s), projected).transpose();
  }
  for (std::size_t g = 0; g < layout.group_count(); ++g) {
    for (Eigen::Index i = 0; i < n_rows; ++i) {
      if (projected.row_level[g][i] >= 0) continue;
      const auto col = unseen.at({g, level_key(fit.spec.groups[g], rows[i])});
      eta.col(i) += fresh.col(col);
    }
  }
  return eta;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<Prediction> predict_prob(const ModelFit& fit, std::span<const ModelRow> rows) {
  const Eigen::MatrixXd eta = linear_predictor_draws(fit, rows);
  std::vector<Prediction> out;
  out.reserve(rows.size());
  std::vector<double> probs(static_cast<std::size_t>(eta.rows()));
  for (Eigen::Index i = 0; i < eta.cols(); ++i) {
    double sum = 0.0;
    for (Eigen::Index s = 0; s < eta.rows(); ++s) {
      probs[s] = inv_logit(eta(s, i));
      sum += probs[s];
    }
    out.push_back({sum / static_cast<double>(probs.size()), quantile(probs, 0.05),
                   quantile(probs, 0.95)});
  }
  return out;
}

std::vector<MarginalEffect> marginal_effect_summary(const ModelFit& fit, EffectGroup group) {
  const auto g = fit.spec.group_index(group);
  if (!g) {
    throw std::invalid_argument("marginal_effect_summary: group " + std::string(to_string(group)) +
                                " not in model " + std::string(to_string(fit.spec.id)));
  }
  const auto& layout = fit.design.layout;
  const auto& names = fit.design.level_names[*g];
  std::vector<MarginalEffect> out;
  out.reserve(names.size());
  std::vector<double> values(fit.draw_count());
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto row = static_cast<Eigen::Index>(layout.group_offset[*g] + j);
    double positive = 0.0, sum = 0.0;
    for (std::size_t s = 0; s < values.size(); ++s) {
      values[s] = fit.draws(row, static_cast<Eigen::Index>(s));
      if (values[s] > 0.0) positive += 1.0;
      sum += values[s];
    }
    const double count = static_cast<double>(values.size());
    out.push_back({names[j], positive / count, sum / count, quantile(values, 0.05),
                   quantile(values, 0.95)});
  }
  std::stable_sort(out.begin(), out.end(), [](const MarginalEffect& a, const MarginalEffect& b) {
    if (a.prob_positive != b.prob_positive) return a.prob_positive > b.prob_positive;
    if (a.mean != b.mean) return a.mean > b.mean;
    return a.level < b.level;
  });
  return out;
}

std::vector<SupplierTariffRow> supplier_tariff_report(const ModelFit& fit, ReportDirection direction,
                                                      std::size_t count) {
  if (!fit.spec.has_group(EffectGroup::SupplierTariff)) {
    throw std::invalid_argument("supplier_tariff_report: model lacks supplier x tariff effects");
  }
  auto ranking = marginal_effect_summary(fit, EffectGroup::Supplier);
  if (direction == ReportDirection::Bottom) std::reverse(ranking.begin(), ranking.end());
  ranking.resize(std::min(count, ranking.size()));

  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> rows_by_pair;
  for (std::size_t i = 0; i < fit.rows.size(); ++i) {
    rows_by_pair[fit.rows[i].supplier_id][fit.rows[i].tariff_id].push_back(i);
  }

  std::vector<SupplierTariffRow> out;
  for (std::size_t rank = 0; rank < ranking.size(); ++rank) {
    const auto& supplier = ranking[rank].level;
    for (const auto& [tariff, indices] : rows_by_pair[supplier]) {
      std::vector<ModelRow> subset;
      for (auto i : indices) subset.push_back(fit.rows[i]);
      const Eigen::MatrixXd eta = linear_predictor_draws(fit, subset);
      std::vector<double> averaged(static_cast<std::size_t>(eta.rows()));
      double total = 0.0;
      for (Eigen::Index s = 0; s < eta.rows(); ++s) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < eta.cols(); ++i) sum += inv_logit(eta(s, i));
        averaged[s] = sum / static_cast<double>(eta.cols());
        total += averaged[s];
      }
      double observed = 0.0;
      for (const auto& r : subset) {
        const double rate = static_cast<double>(r.x) / r.n;
        observed += direction == ReportDirection::Top ? rate : 1.0 - rate;
      }
      SupplierTariffRow row;
      row.rank = static_cast<int>(rank + 1);
      row.supplier_id = supplier;
      row.tariff_id = tariff;
      row.prob_positive = ranking[rank].prob_positive;
      row.mean = total / static_cast<double>(averaged.size());
      row.lower = quantile(averaged, 0.05);
      row.upper = quantile(averaged, 0.95);
      row.observed = observed / static_cast<double>(subset.size());
      row.years = static_cast<int>(subset.size());
      out.push_back(std::move(row));
    }
  }
  return out;
}

void write_marginal(std::ostream& out, std::span<const MarginalEffect> effects) {
  csv::Writer w(out);
  w.row({"rank", "level", "prob_positive", "mean", "q05", "q95"});
  int rank = 0;
  for (const auto& e : effects) {
    w.row({std::to_string(++rank), e.level, format_double(e.prob_positive), format_double(e.mean),
           format_double(e.lower), format_double(e.upper)});
  }
}

void write_supplier_tariff(std::ostream& out, std::span<const SupplierTariffRow> rows) {
  csv::Writer w(out);
  w.row({"rank", "supplier_id", "tariff_id", "prob_positive", "mean_prob", "q05", "q95",
         "observed", "years"});
  for (const auto& r : rows) {
    w.row({std::to_string(r.rank), r.supplier_id, r.tariff_id, format_double(r.prob_positive),
           format_double(r.mean), format_double(r.lower), format_double(r.upper),
           format_double(r.observed), std::to_string(r.years)});
  }
}

void write_parameter_summary(std::ostream& out, const ModelFit& fit) {
  csv::Writer w(out);
  w.row({"parameter", "map", "mean", "q05", "q95"});
  const auto& layout = fit.design.layout;
  auto emit = [&](const std::string& name, std::size_t index, bool exponentiate) {
    std::vector<double> values(fit.draw_count());
    double sum = 0.0;
    for (std::size_t s = 0; s < values.size(); ++s) {
      const double v = fit.draws(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(s));
      values[s] = exponentiate ? std::exp(v) : v;
      sum += values[s];
    }
    const double map = exponentiate ? std::exp(fit.mode[static_cast<Eigen::Index>(index)])
                                    : fit.mode[static_cast<Eigen::Index>(index)];
    w.row({name, format_double(map), format_double(sum / static_cast<double>(values.size())),
           format_double(quantile(values, 0.05)), format_double(quantile(values, 0.95))});
  };
  emit("beta0", 0, false);
  for (std::size_t g = 0; g < layout.group_count(); ++g) {
    emit("sigma_" + std::string(to_string(fit.spec.groups[g])), layout.sigma_offset + g, true);
  }
  for (std::size_t j = 0; j < layout.spline_size; ++j) {
    emit("spline_" + std::to_string(j), layout.spline_offset + j, false);
  }
}

}  // namespace riskprof
