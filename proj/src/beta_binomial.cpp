#include "riskprof/beta_binomial.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "riskprof/csv.hpp"
#include "riskprof/optim.hpp"
#include "riskprof/parallel.hpp"

namespace riskprof {

namespace {

using boost::math::digamma;
using boost::math::lgamma;

double log_beta_fn(double a, double b) { return lgamma(a) + lgamma(b) - lgamma(a + b); }

double log_choose(int n, int k) {
  return lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0);
}

constexpr int kRisingSumMaxN = 256;

}  // namespace

double betabinom_log_pmf(int k, int n, double alpha, double beta) {
  if (k < 0 || n < 0 || k > n) throw std::invalid_argument("betabinom_log_pmf: need 0 <= k <= n");
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::invalid_argument("betabinom_log_pmf: alpha and beta must be positive");
  }
  if (n == 0) return 0.0;
  if (n > kRisingSumMaxN) {
    return log_choose(n, k) + log_beta_fn(k + alpha, n - k + beta) - log_beta_fn(alpha, beta);
  }
  // Gamma ratios as rising-factorial sums; the lgamma difference loses about
  // eps * lgamma(beta) when alpha or beta is large.
  double s = 0.0;
  for (int j = 0; j < k; ++j) s += std::log(alpha + j);
  for (int j = 0; j < n - k; ++j) s += std::log(beta + j);
  for (int j = 0; j < n; ++j) s -= std::log(alpha + beta + j);
  return log_choose(n, k) + s;
}

double betabinom_loglik(std::span<const BinomialCount> data, double alpha, double beta,
                        double* grad_log_alpha, double* grad_log_beta) {
  double ll = 0.0, ga = 0.0, gb = 0.0;
  const double psi_ab = digamma(alpha + beta), psi_a = digamma(alpha), psi_b = digamma(beta);
  for (const auto& d : data) {
    if (d.n == 0) continue;
    ll += betabinom_log_pmf(d.x, d.n, alpha, beta);
    if (grad_log_alpha || grad_log_beta) {
      const double psi_nab = digamma(d.n + alpha + beta);
      ga += digamma(d.x + alpha) - psi_nab + psi_ab - psi_a;
      gb += digamma(d.n - d.x + beta) - psi_nab + psi_ab - psi_b;
    }
  }
  if (grad_log_alpha) *grad_log_alpha = ga * alpha;
  if (grad_log_beta) *grad_log_beta = gb * beta;
  return ll;
}

std::pair<double, double> moment_start(std::span<const BinomialCount> data) {
  double sum = 0.0, sum_sq = 0.0;
  int count = 0;
  for (const auto& d : data) {
    if (d.n == 0) continue;
    const double r = static_cast<double>(d.x) / d.n;
    sum += r;
    sum_sq += r * r;
    ++count;
  }
  if (count < 2) return {1.0, 1.0};
  const double mean = sum / count;
  const double var = (sum_sq - count * mean * mean) / (count - 1);
  if (mean <= 0.0 || mean >= 1.0 || var <= 0.0) return {1.0, 1.0};
  const double concentration = mean * (1.0 - mean) / var - 1.0;
  if (!(concentration > 0.0)) return {1.0, 1.0};
  const double a = mean * concentration, b = (1.0 - mean) * concentration;
  if (a < BetaHyper::kMin || b < BetaHyper::kMin || a > BetaHyper::kMax || b > BetaHyper::kMax) {
    return {1.0, 1.0};
  }
  return {a, b};
}

BetaHyper fit_beta_binomial(std::span<const BinomialCount> data) {
  if (std::none_of(data.begin(), data.end(), [](const BinomialCount& d) { return d.n > 0; })) {
    throw std::invalid_argument("fit_beta_binomial: need at least one cell with n > 0");
  }
  const double lo = std::log(BetaHyper::kMin), hi = std::log(BetaHyper::kMax);
  const auto [a0, b0] = moment_start(data);

  // Coordinates outside the clamp box are evaluated at the box and see a flat
  // objective, so a divergent MLE terminates on the boundary.
  auto objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
    const double za = std::clamp(z[0], lo, hi), zb = std::clamp(z[1], lo, hi);
    double ga = 0.0, gb = 0.0;
    const double ll = betabinom_loglik(data, std::exp(za), std::exp(zb), &ga, &gb);
    grad.resize(2);
    grad[0] = (z[0] < lo || z[0] > hi) ? 0.0 : -ga;
    grad[1] = (z[1] < lo || z[1] > hi) ? 0.0 : -gb;
    return -ll;
  };

  optim::Options options;
  options.gradient_tolerance = 1e-9;
  options.max_iterations = 1000;
  Eigen::VectorXd start(2);
  start << std::log(a0), std::log(b0);
  const auto result = optim::minimize_bfgs(objective, start, options);

  BetaHyper h;
  const double za = std::clamp(result.x[0], lo, hi), zb = std::clamp(result.x[1], lo, hi);
  const bool at_bound = za <= lo + 1e-9 || za >= hi - 1e-9 || zb <= lo + 1e-9 || zb >= hi - 1e-9;
  h.alpha = std::exp(za);
  h.beta = std::exp(zb);
  double ga = 0.0, gb = 0.0;
  h.log_likelihood = betabinom_loglik(data, h.alpha, h.beta, &ga, &gb);
  h.initial_log_likelihood = betabinom_loglik(data, a0, b0);
  h.gradient_norm = std::max(std::abs(ga), std::abs(gb));
  h.iterations = result.iterations;
  // The optimizer may stall at the rounding floor of the objective before its
  // own tolerance; the analytic gradient decides convergence.
  h.converged = !at_bound && h.gradient_norm <= 1e-6;
  return h;
}

double smooth(int x, int n, const BetaHyper& hyper) {
  if (x < 0 || x > n) throw std::invalid_argument("smooth: need 0 <= x <= n");
  return (x + hyper.alpha) / (n + hyper.alpha + hyper.beta);
}

SmoothedRates::SmoothedRates(InterceptionKind kind, std::vector<BetaHyper> hypers,
                             std::vector<SmoothedCell> cells)
    : kind_(kind), hypers_(std::move(hypers)), cells_(std::move(cells)) {
  for (std::size_t i = 0; i < hypers_.size(); ++i) {
    hyper_index_[{hypers_[i].tariff_id, hypers_[i].year}] = i;
  }
  std::map<int, std::pair<double, double>> totals;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto& c = cells_[i].cell;
    cell_index_[c.key()] = i;
    totals[c.year].first += c.x;
    totals[c.year].second += c.n;
  }
  for (const auto& [year, xn] : totals) pooled_[year] = xn.second > 0 ? xn.first / xn.second : 0.0;
}

std::optional<double> SmoothedRates::rate(const CellKey& key) const {
  auto it = cell_index_.find(key);
  if (it == cell_index_.end()) return std::nullopt;
  return cells_[it->second].rate;
}

const BetaHyper* SmoothedRates::hyper(const std::string& tariff_id, int year) const {
  auto it = hyper_index_.find({tariff_id, year});
  return it == hyper_index_.end() ? nullptr : &hypers_[it->second];
}

double SmoothedRates::pooled_rate(int year) const {
  auto it = pooled_.find(year);
  if (it == pooled_.end()) {
    throw ValidationError("smoothed rates do not cover year " + std::to_string(year));
  }
  return it->second;
}

double SmoothedRates::imputed(const std::string& tariff_id, int year) const {
  if (const BetaHyper* h = hyper(tariff_id, year)) return h->prior_mean();
  return pooled_rate(year);
}

SmoothedRates smooth_cells(std::span<const CellCounts> cells, int workers) {
  if (cells.empty()) throw ValidationError("smooth_cells: no cells");
  const InterceptionKind kind = cells.front().kind;
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].kind != kind) throw ValidationError("smooth_cells: mixed interception kinds");
    groups[{cells[i].tariff_id, cells[i].year}].push_back(i);
  }
  std::vector<std::pair<std::pair<std::string, int>, std::vector<std::size_t>>> ordered(
      groups.begin(), groups.end());
  std::vector<BetaHyper> hypers(ordered.size());
  parallel_for(ordered.size(), workers, [&](std::size_t g) {
    std::vector<BinomialCount> data;
    for (auto i : ordered[g].second) data.push_back({cells[i].x, cells[i].n});
    BetaHyper h = fit_beta_binomial(data);
    h.tariff_id = ordered[g].first.first;
    h.year = ordered[g].first.second;
    h.kind = kind;
    hypers[g] = std::move(h);
  });

  std::vector<SmoothedCell> smoothed;
  smoothed.reserve(cells.size());
  for (std::size_t g = 0; g < ordered.size(); ++g) {
    for (auto i : ordered[g].second) {
      smoothed.push_back({cells[i], smooth(cells[i].x, cells[i].n, hypers[g]), g});
    }
  }
  std::sort(smoothed.begin(), smoothed.end(),
            [](const SmoothedCell& a, const SmoothedCell& b) { return a.cell.key() < b.cell.key(); });
  return SmoothedRates(kind, std::move(hypers), std::move(smoothed));
}

void write_hypers(std::ostream& out, std::span<const BetaHyper> hypers) {
  csv::Writer w(out);
  w.row({"tariff_id", "year", "kind", "alpha", "beta", "converged", "loglik"});
  for (const auto& h : hypers) {
    w.row({h.tariff_id, std::to_string(h.year), std::string(to_string(h.kind)),
           format_double(h.alpha), format_double(h.beta), h.converged ? "1" : "0",
           format_double(h.log_likelihood)});
  }
}

void write_smoothed(std::ostream& out, const SmoothedRates& rates) {
  csv::Writer w(out);
  w.row({"supplier_id", "tariff_id", "year", "kind", "x", "n", "rate"});
  for (const auto& s : rates.cells()) {
    const auto& c = s.cell;
    w.row({c.supplier_id, c.tariff_id, std::to_string(c.year), std::string(to_string(c.kind)),
           std::to_string(c.x), std::to_string(c.n), format_double(s.rate)});
  }
}

SmoothedRates read_smoothed(std::istream& hyper_in, std::istream& smoothed_in,
                            InterceptionKind kind) {
  const csv::Table ht = csv::read(hyper_in);
  const auto ct = ht.column("tariff_id"), cy = ht.column("year"), ck = ht.column("kind"),
             ca = ht.column("alpha"), cb = ht.column("beta"), cc = ht.column("converged"),
             cl = ht.column("loglik");
  std::vector<BetaHyper> hypers;
  for (const auto& f : ht.rows) {
    if (parse_kind(f[ck]) != kind) continue;
    BetaHyper h;
    h.tariff_id = f[ct];
    h.year = std::stoi(f[cy]);
    h.kind = kind;
    h.alpha = std::stod(f[ca]);
    h.beta = std::stod(f[cb]);
    h.converged = f[cc] == "1";
    h.log_likelihood = std::stod(f[cl]);
    hypers.push_back(std::move(h));
  }
  std::map<std::pair<std::string, int>, std::size_t> index;
  for (std::size_t i = 0; i < hypers.size(); ++i) index[{hypers[i].tariff_id, hypers[i].year}] = i;

  const csv::Table st = csv::read(smoothed_in);
  const auto ss = st.column("supplier_id"), stt = st.column("tariff_id"), sy = st.column("year"),
             sk = st.column("kind"), sx = st.column("x"), sn = st.column("n"),
             sr = st.column("rate");
  std::vector<SmoothedCell> cells;
  for (const auto& f : st.rows) {
    if (parse_kind(f[sk]) != kind) continue;
    CellCounts c{f[ss], f[stt], std::stoi(f[sy]), kind, std::stoi(f[sx]), std::stoi(f[sn])};
    auto it = index.find({c.tariff_id, c.year});
    if (it == index.end()) throw ValidationError("smoothed cell without hyperparameters");
    cells.push_back({std::move(c), std::stod(f[sr]), it->second});
  }
  return SmoothedRates(kind, std::move(hypers), std::move(cells));
}

}  // namespace riskprof
