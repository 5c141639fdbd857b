#include "riskprof/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "riskprof/csv.hpp"

namespace riskprof {

std::vector<std::string> SimConfig::violations() const {
  std::vector<std::string> v;
  auto at_least_one = [&](int value, const char* name) {
    if (value < 1) v.push_back(std::string(name) + " must be >= 1");
  };
  auto non_negative = [&](double value, const char* name) {
    if (!(value >= 0.0) || !std::isfinite(value)) v.push_back(std::string(name) + " must be >= 0");
  };
  at_least_one(suppliers, "suppliers");
  at_least_one(tariffs, "tariffs");
  at_least_one(years, "years");
  at_least_one(tariffs_per_supplier, "tariffs_per_supplier");
  if (tariffs_per_supplier > tariffs) v.push_back("tariffs_per_supplier must be <= tariffs");
  if (!(consignments_mean > 0.0)) v.push_back("consignments_mean must be > 0");
  if (!(consignments_size > 0.0)) v.push_back("consignments_size must be > 0");
  if (!std::isfinite(beta0)) v.push_back("beta0 must be finite");
  non_negative(sigma_supplier, "sigma_supplier");
  non_negative(sigma_tariff, "sigma_tariff");
  non_negative(sigma_year, "sigma_year");
  non_negative(sigma_supplier_tariff, "sigma_supplier_tariff");
  non_negative(sigma_supplier_year, "sigma_supplier_year");
  if (planted_count < 0 || planted_count > suppliers) {
    v.push_back("planted_count must be in [0, suppliers]");
  }
  if (!std::isfinite(planted_offset)) v.push_back("planted_offset must be finite");
  if (!std::isfinite(association_strength)) v.push_back("association_strength must be finite");
  if (!std::isfinite(non_regulated_base)) v.push_back("non_regulated_base must be finite");
  if (!std::isfinite(administrative_base)) v.push_back("administrative_base must be finite");
  return v;
}

std::string supplier_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%04d", index + 1);
  return buf;
}

std::string tariff_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "T%03d", index + 1);
  return buf;
}

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Pathway generate_pathway(const SimConfig& c) {
  if (auto v = c.violations(); !v.empty()) {
    std::string msg = "invalid simulation config:";
    for (const auto& s : v) msg += "\n  " + s;
    throw ValidationError(msg);
  }
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Pathway out;
  std::vector<double> gamma(c.suppliers), tau(c.tariffs), alpha(c.years);
  for (auto& g : gamma) g = c.sigma_supplier * z(rng);
  for (auto& t : tau) t = c.sigma_tariff * z(rng);
  for (auto& a : alpha) a = c.sigma_year * z(rng);

  std::vector<int> order(c.suppliers);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> planted(c.suppliers, false);
  for (int k = 0; k < c.planted_count; ++k) planted[order[k]] = true;

  // Tariff portfolios and interaction effects.
  std::vector<std::vector<int>> portfolio(c.suppliers);
  std::vector<std::vector<double>> phi(c.suppliers);
  std::vector<std::vector<double>> kappa(c.suppliers, std::vector<double>(c.years));
  std::vector<int> all_tariffs(c.tariffs);
  std::iota(all_tariffs.begin(), all_tariffs.end(), 0);
  for (int s = 0; s < c.suppliers; ++s) {
    std::vector<int> pick = all_tariffs;
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(c.tariffs_per_supplier);
    std::sort(pick.begin(), pick.end());
    portfolio[s] = pick;
    for (std::size_t k = 0; k < pick.size(); ++k) phi[s].push_back(c.sigma_supplier_tariff * z(rng));
    for (int y = 0; y < c.years; ++y) kappa[s][y] = c.sigma_supplier_year * z(rng);
  }

  for (int s = 0; s < c.suppliers; ++s) {
    const double offset = planted[s] ? c.planted_offset : 0.0;
    out.truth.push_back({"supplier", supplier_name(s), gamma[s] + offset, planted[s]});
    if (planted[s]) out.planted_suppliers.push_back(supplier_name(s));
  }
  std::sort(out.planted_suppliers.begin(), out.planted_suppliers.end());
  for (int t = 0; t < c.tariffs; ++t) out.truth.push_back({"tariff", tariff_name(t), tau[t], false});
  for (int y = 0; y < c.years; ++y) {
    out.truth.push_back({"year", std::to_string(c.first_year + y), alpha[y], false});
  }
  for (int s = 0; s < c.suppliers; ++s) {
    for (std::size_t k = 0; k < portfolio[s].size(); ++k) {
      out.truth.push_back({"supplier_tariff", supplier_name(s) + "|" + tariff_name(portfolio[s][k]),
                           phi[s][k], false});
    }
  }
  for (int s = 0; s < c.suppliers; ++s) {
    for (int y = 0; y < c.years; ++y) {
      out.truth.push_back({"supplier_year", supplier_name(s) + "|" + std::to_string(c.first_year + y),
                           kappa[s][y], false});
    }
  }

  std::gamma_distribution<double> volume(c.consignments_size,
                                         c.consignments_mean / c.consignments_size);
  for (int y = 0; y < c.years; ++y) {
    for (int s = 0; s < c.suppliers; ++s) {
      const double offset = planted[s] ? c.planted_offset : 0.0;
      for (std::size_t k = 0; k < portfolio[s].size(); ++k) {
        const int t = portfolio[s][k];
        std::poisson_distribution<int> count_dist(std::max(volume(rng), 1e-12));
        const int count = count_dist(rng);
        const double p = logistic(c.beta0 + gamma[s] + offset + tau[t] + alpha[y] + phi[s][k] +
                                  kappa[s][y]);
        for (int j = 0; j < count; ++j) {
          InspectionRecord r;
          r.supplier_id = supplier_name(s);
          r.tariff_id = tariff_name(t);
          r.year = c.first_year + y;
          r.regulated = unif(rng) < p;
          const double shift = r.regulated ? c.association_strength : 0.0;
          r.non_regulated = unif(rng) < logistic(c.non_regulated_base + shift);
          r.administrative = unif(rng) < logistic(c.administrative_base + shift);
          out.records.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> bernoulli_stream(std::size_t count, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("bernoulli_stream: rate outside [0,1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::uint8_t> out(count);
  for (auto& v : out) v = unif(rng) < rate ? 1 : 0;
  return out;
}

void write_truth(std::ostream& out, std::span<const TruthEffect> truth) {
  csv::Writer w(out);
  w.row({"group", "level", "effect", "planted"});
  for (const auto& t : truth) {
    w.row({t.group, t.level, format_double(t.effect), t.planted ? "1" : "0"});
  }
}

std::vector<TruthEffect> read_truth(std::istream& in) {
  const auto table = csv::read(in);
  const auto g = table.column("group"), l = table.column("level"), e = table.column("effect"),
             p = table.column("planted");
  std::vector<TruthEffect> out;
  for (const auto& row : table.rows) {
    out.push_back({row[g], row[l], std::stod(row[e]), row[p] == "1"});
  }
  return out;
}

}  // namespace riskprof
