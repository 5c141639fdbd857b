#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskprof/records.hpp"

namespace riskprof {

/// Beta prior hyperparameters for one (tariff, year, kind) group.
struct BetaHyper {
  static constexpr double kMin = 1e-3;
  static constexpr double kMax = 1e6;

  std::string tariff_id;
  int year = 0;
  InterceptionKind kind = InterceptionKind::Regulated;
  double alpha = 1.0;
  double beta = 1.0;
  /// False when the optimum ran into the clamp range or the optimizer stalled.
  bool converged = false;
  double log_likelihood = 0.0;
  /// Log-likelihood at the method-of-moments starting point.
  double initial_log_likelihood = 0.0;
  /// Max-abs gradient in (log alpha, log beta) at the returned point.
  double gradient_norm = 0.0;
  int iterations = 0;

  double prior_mean() const { return alpha / (alpha + beta); }
};

struct BinomialCount {
  int x = 0;
  int n = 0;
};

/// log Pr(X = k) for X ~ BetaBinomial(n, alpha, beta), via log-gamma.
double betabinom_log_pmf(int k, int n, double alpha, double beta);

/// Summed log-likelihood and its gradient in (log alpha, log beta).
double betabinom_loglik(std::span<const BinomialCount> data, double alpha, double beta,
                        double* grad_log_alpha = nullptr, double* grad_log_beta = nullptr);

/// Method-of-moments start on the per-supplier rates; (1, 1) when invalid.
std::pair<double, double> moment_start(std::span<const BinomialCount> data);

/// Maximum-likelihood (alpha, beta) for one tariff-year. Degenerate data
/// (all x = 0, all x = n, or under-dispersion) ends at the clamp range and is
/// flagged converged = false rather than raising.
BetaHyper fit_beta_binomial(std::span<const BinomialCount> data);

/// Posterior-mean rate (x + alpha) / (n + alpha + beta).
double smooth(int x, int n, const BetaHyper& hyper);

struct SmoothedCell {
  CellCounts cell;
  double rate = 0.0;
  std::size_t hyper_index = 0;
};

/// EB-smoothed rates for one interception kind, all tariff-years.
class SmoothedRates {
 public:
  SmoothedRates() = default;
  SmoothedRates(InterceptionKind kind, std::vector<BetaHyper> hypers, std::vector<SmoothedCell> cells);

  InterceptionKind kind() const { return kind_; }
  const std::vector<BetaHyper>& hypers() const { return hypers_; }
  const std::vector<SmoothedCell>& cells() const { return cells_; }

  bool covers_year(int year) const { return pooled_.contains(year); }
  std::optional<double> rate(const CellKey& key) const;
  const BetaHyper* hyper(const std::string& tariff_id, int year) const;
  /// Pooled sum(x)/sum(n) over all cells of a year.
  double pooled_rate(int year) const;
  /// Value used for an (s,t) absent in `year`: the tariff-year prior mean, or
  /// the pooled rate when the tariff itself is absent.
  double imputed(const std::string& tariff_id, int year) const;

 private:
  InterceptionKind kind_ = InterceptionKind::Regulated;
  std::vector<BetaHyper> hypers_;
  std::vector<SmoothedCell> cells_;
  std::map<CellKey, std::size_t> cell_index_;
  std::map<std::pair<std::string, int>, std::size_t> hyper_index_;
  std::map<int, double> pooled_;
};

/// Fits every (tariff, year) group of `cells` (all one kind) independently.
SmoothedRates smooth_cells(std::span<const CellCounts> cells, int workers = 1);

void write_hypers(std::ostream& out, std::span<const BetaHyper> hypers);
void write_smoothed(std::ostream& out, const SmoothedRates& rates);
/// Rebuilds SmoothedRates from the tables written above.
SmoothedRates read_smoothed(std::istream& hypers, std::istream& smoothed, InterceptionKind kind);

}  // namespace riskprof
