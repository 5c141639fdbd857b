#include "riskprof/loo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "riskprof/csv.hpp"
#include "riskprof/glmm_report.hpp"

namespace riskprof {

double log_sum_exp(std::span<const double> values) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

PointwiseLogLik pointwise_loglik(const ModelFit& fit, std::span<const ModelRow> rows) {
  const Eigen::MatrixXd eta = linear_predictor_draws(fit, rows);
  const Design projected = fit.design.project(rows);
  PointwiseLogLik ll(eta.rows(), eta.cols());
  for (Eigen::Index i = 0; i < eta.cols(); ++i) {
    const double x = projected.x[i], n = projected.n[i], lc = projected.log_choose[i];
    for (Eigen::Index s = 0; s < eta.rows(); ++s) {
      ll(s, i) = lc + x * eta(s, i) - n * log1p_exp(eta(s, i));
    }
  }
  return ll;
}

namespace {

double sample_sd(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace

LooResult is_loo(const PointwiseLogLik& ll, std::string label) {
  const auto draws = ll.rows();
  const auto n_rows = ll.cols();
  if (draws < 100) throw std::invalid_argument("is_loo: need at least 100 draws");
  if (n_rows < 2) throw std::invalid_argument("is_loo: standard errors need at least 2 rows");
  if (!ll.allFinite()) throw NumericalError("is_loo: non-finite log-likelihood");

  LooResult r;
  r.label = std::move(label);
  const double log_s = std::log(static_cast<double>(draws));
  const double log_cap_scale = 0.75 * log_s;
  std::vector<double> column(static_cast<std::size_t>(draws)), log_w(column.size()),
      log_wp(column.size());
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    for (Eigen::Index s = 0; s < draws; ++s) {
      column[s] = ll(s, i);
      log_w[s] = -column[s];
    }
    const double log_mean_w = log_sum_exp(log_w) - log_s;
    const double log_cap = log_mean_w + log_cap_scale;
    for (std::size_t s = 0; s < log_w.size(); ++s) {
      log_w[s] = std::min(log_w[s], log_cap);
      log_wp[s] = log_w[s] + column[s];
    }
    const double elpd = log_sum_exp(log_wp) - log_sum_exp(log_w);
    const double lpd = log_sum_exp(column) - log_s;
    r.pointwise_elpd.push_back(elpd);
    r.pointwise_lpd.push_back(lpd);
  }
  const double n = static_cast<double>(n_rows);
  std::vector<double> p_i(r.pointwise_elpd.size());
  for (std::size_t i = 0; i < p_i.size(); ++i) {
    r.elpd_loo += r.pointwise_elpd[i];
    p_i[i] = r.pointwise_lpd[i] - r.pointwise_elpd[i];
    r.p_eff += p_i[i];
  }
  r.se_elpd = std::sqrt(n) * sample_sd(r.pointwise_elpd);
  r.looic = -2.0 * r.elpd_loo;
  r.se_looic = 2.0 * r.se_elpd;
  r.se_p_eff = std::sqrt(n) * sample_sd(p_i);
  return r;
}

std::vector<ComparisonRow> compare_table(std::span<const LooResult> results) {
  if (results.size() < 2) throw std::invalid_argument("compare_table: need at least two models");
  std::vector<ComparisonRow> rows;
  for (const auto& r : results) rows.push_back({r, std::nullopt, std::nullopt});
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.loo.looic != b.loo.looic) return a.loo.looic < b.loo.looic;
    return a.loo.label < b.loo.label;
  });
  const auto& best = rows.front().loo;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& other = rows[k].loo;
    if (other.pointwise_elpd.size() != best.pointwise_elpd.size()) {
      throw std::invalid_argument("compare_table: models scored on different rows");
    }
    std::vector<double> diff(best.pointwise_elpd.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
      diff[i] = best.pointwise_elpd[i] - other.pointwise_elpd[i];
    }
    rows[k].delta_looic = other.looic - best.looic;
    rows[k].se_delta = 2.0 * std::sqrt(static_cast<double>(diff.size())) * sample_sd(diff);
  }
  return rows;
}

void write_comparison(std::ostream& out, std::span<const ComparisonRow> rows) {
  csv::Writer w(out);
  w.row({"model", "looic", "se_looic", "p_eff", "se_p_eff", "delta_looic", "se_delta",
         "looic_display", "se_looic_display", "p_eff_display", "se_p_eff_display",
         "delta_looic_display", "se_delta_display"});
  for (const auto& r : rows) {
    const auto& l = r.loo;
    w.row({l.label, format_double(l.looic), format_double(l.se_looic), format_double(l.p_eff),
           format_double(l.se_p_eff), r.delta_looic ? format_double(*r.delta_looic) : "",
           r.se_delta ? format_double(*r.se_delta) : "", format_fixed(l.looic, 0),
           format_fixed(l.se_looic, 0), format_fixed(l.p_eff, 0), format_fixed(l.se_p_eff, 1),
           r.delta_looic ? format_fixed(*r.delta_looic, 1) : "",
           r.se_delta ? format_fixed(*r.se_delta, 1) : ""});
  }
}

}  // namespace riskprof
