#include "riskprof/profiling.hpp"

#include <ostream>
#include <set>
#include <stdexcept>

#include "riskprof/csv.hpp"

namespace riskprof {

std::string_view to_string(ProfileVariant variant) {
  switch (variant) {
    case ProfileVariant::TariffSupplierRaw: return "tariff-supplier-raw";
    case ProfileVariant::SupplierWithinTariffMean: return "supplier-within-tariff-mean";
    case ProfileVariant::EbSmoothed: return "eb-smoothed";
  }
  return "unknown";
}

ProfileVariant parse_variant(std::string_view text) {
  for (auto v : {ProfileVariant::TariffSupplierRaw, ProfileVariant::SupplierWithinTariffMean,
                 ProfileVariant::EbSmoothed}) {
    if (to_string(v) == text) return v;
  }
  throw ValidationError("unknown profile variant '" + std::string(text) + "'");
}

Profile::Profile(int year, InterceptionKind kind, ProfileVariant variant,
                 std::map<std::pair<std::string, std::string>, double> scores,
                 std::map<std::string, double> tariff_fallback, double pooled_fallback)
    : year_(year),
      kind_(kind),
      variant_(variant),
      scores_(std::move(scores)),
      tariff_fallback_(std::move(tariff_fallback)),
      pooled_fallback_(pooled_fallback) {}

double Profile::score(const std::string& supplier_id, const std::string& tariff_id,
                      bool* imputed) const {
  if (auto it = scores_.find({supplier_id, tariff_id}); it != scores_.end()) {
    if (imputed) *imputed = false;
    return it->second;
  }
  if (imputed) *imputed = true;
  if (auto it = tariff_fallback_.find(tariff_id); it != tariff_fallback_.end()) return it->second;
  return pooled_fallback_;
}

Profile build_profile(const SmoothedRates& rates, int year, ProfileVariant variant) {
  if (!rates.covers_year(year)) {
    throw ValidationError("build_profile: rates do not cover year " + std::to_string(year));
  }
  std::map<std::pair<std::string, std::string>, double> scores;
  std::map<std::string, std::pair<double, int>> tariff_sums;
  for (const auto& s : rates.cells()) {
    const auto& c = s.cell;
    if (c.year != year) continue;
    const double raw = static_cast<double>(c.x) / c.n;
    switch (variant) {
      case ProfileVariant::TariffSupplierRaw: scores[{c.supplier_id, c.tariff_id}] = raw; break;
      case ProfileVariant::EbSmoothed: scores[{c.supplier_id, c.tariff_id}] = s.rate; break;
      case ProfileVariant::SupplierWithinTariffMean:
        scores[{c.supplier_id, c.tariff_id}] = 0.0;
        tariff_sums[c.tariff_id].first += raw;
        tariff_sums[c.tariff_id].second += 1;
        break;
    }
  }
  if (variant == ProfileVariant::SupplierWithinTariffMean) {
    for (auto& [key, value] : scores) {
      const auto& [sum, count] = tariff_sums[key.second];
      value = sum / count;
    }
  }
  std::map<std::string, double> fallback;
  for (const auto& h : rates.hypers()) {
    if (h.year == year) fallback[h.tariff_id] = h.prior_mean();
  }
  return Profile(year, rates.kind(), variant, std::move(scores), std::move(fallback),
                 rates.pooled_rate(year));
}

std::vector<ScoredOutcome> score_outcomes(const Profile& profile,
                                          std::span<const CellCounts> outcomes,
                                          long* imputed_inspections) {
  std::vector<ScoredOutcome> scored;
  scored.reserve(outcomes.size() * 2);
  long imputed = 0;
  for (const auto& c : outcomes) {
    if (c.kind != InterceptionKind::Regulated) {
      throw std::invalid_argument("score_outcomes: outcomes must be regulated cells");
    }
    bool missing = false;
    const double s = profile.score(c.supplier_id, c.tariff_id, &missing);
    if (missing) imputed += c.n;
    if (c.x > 0) scored.push_back({s, true, c.x});
    if (c.n - c.x > 0) scored.push_back({s, false, c.n - c.x});
  }
  if (imputed_inspections) *imputed_inspections = imputed;
  return scored;
}

AcrossResult evaluate_across(const Profile& profile, std::span<const CellCounts> outcomes) {
  AcrossResult r;
  r.profile_year = profile.year();
  r.kind = profile.kind();
  r.variant = profile.variant();
  const auto scored = score_outcomes(profile, outcomes, &r.imputed_inspections);
  for (const auto& s : scored) (s.label ? r.positives : r.negatives) += s.weight;
  r.curve = roc_curve(scored);
  return r;
}

std::vector<WithinTariffResult> evaluate_within_tariff(const Profile& profile,
                                                       std::span<const CellCounts> outcomes) {
  std::map<std::string, std::vector<CellCounts>> by_tariff;
  for (const auto& c : outcomes) by_tariff[c.tariff_id].push_back(c);
  std::vector<WithinTariffResult> results;
  for (const auto& [tariff, cells] : by_tariff) {
    WithinTariffResult r;
    r.tariff_id = tariff;
    std::set<std::string> suppliers;
    for (const auto& c : cells) {
      r.fails += c.x;
      r.inspections += c.n;
      suppliers.insert(c.supplier_id);
    }
    if (suppliers.size() < 2) {
      r.skip_reason = "single supplier";
    } else if (r.fails == 0 || r.fails == r.inspections) {
      r.skip_reason = "single outcome class";
    } else {
      r.auc = auc(score_outcomes(profile, cells));
    }
    results.push_back(std::move(r));
  }
  return results;
}

void write_across(std::ostream& out, std::span<const AcrossResult> results) {
  csv::Writer w(out);
  w.row({"profile_year", "outcome_year", "kind", "variant", "auc", "auc_display", "positives",
         "negatives", "imputed_inspections"});
  for (const auto& r : results) {
    w.row({std::to_string(r.profile_year), std::to_string(r.profile_year + 1),
           std::string(to_string(r.kind)), std::string(to_string(r.variant)),
           format_double(r.curve.auc), format_fixed(r.curve.auc, 3), std::to_string(r.positives),
           std::to_string(r.negatives), std::to_string(r.imputed_inspections)});
  }
}

void write_roc_points(std::ostream& out, std::span<const AcrossResult> results) {
  csv::Writer w(out);
  w.row({"profile_year", "kind", "variant", "fpr", "tpr"});
  for (const auto& r : results) {
    for (const auto& p : r.curve.points) {
      w.row({std::to_string(r.profile_year), std::string(to_string(r.kind)),
             std::string(to_string(r.variant)), format_double(p.fpr), format_double(p.tpr)});
    }
  }
}

void write_within(std::ostream& out, std::span<const WithinRow> rows) {
  csv::Writer w(out);
  w.row({"tariff_id", "profile_year", "kind", "variant", "auc", "auc_display", "fails",
         "inspections", "skipped"});
  for (const auto& row : rows) {
    const auto& r = row.result;
    w.row({r.tariff_id, std::to_string(row.profile_year), std::string(to_string(row.kind)),
           std::string(to_string(row.variant)), r.auc ? format_double(*r.auc) : "NA",
           r.auc ? format_fixed(*r.auc, 3) : "NA", std::to_string(r.fails),
           std::to_string(r.inspections), r.skip_reason});
  }
}

}  // namespace riskprof
