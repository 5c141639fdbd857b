#include "riskprof/association.hpp"

#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>

#include "riskprof/csv.hpp"

namespace riskprof {

TwoByTwo crosstab(std::span<const InspectionRecord> records, InterceptionKind low_kind,
                  std::optional<int> year) {
  if (low_kind != InterceptionKind::NonRegulated && low_kind != InterceptionKind::Administrative) {
    throw std::invalid_argument("crosstab: low_kind must be non_regulated or administrative");
  }
  TwoByTwo t;
  for (const auto& r : records) {
    if (year && r.year != *year) continue;
    const bool x = has_flag(r, low_kind);
    const bool y = r.regulated;
    if (x && y) ++t.a;
    else if (x) ++t.b;
    else if (y) ++t.c;
    else ++t.d;
  }
  return t;
}

std::optional<LogOddsResult> log_odds_ratio(const TwoByTwo& t) {
  if (t.a + t.b == 0 || t.c + t.d == 0 || t.a + t.c == 0 || t.b + t.d == 0) return std::nullopt;
  LogOddsResult r;
  double a = t.a, b = t.b, c = t.c, d = t.d;
  if (t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
    r.corrected = true;
  }
  r.estimate = std::log((a / b) / (c / d));
  const double se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
  r.ci_low = r.estimate - kZ95 * se;
  r.ci_high = r.estimate + kZ95 * se;
  return r;
}

std::vector<AssociationRow> association_table(std::span<const InspectionRecord> records) {
  std::set<int> years;
  for (const auto& r : records) years.insert(r.year);
  std::vector<AssociationRow> rows;
  for (auto kind : {InterceptionKind::NonRegulated, InterceptionKind::Administrative}) {
    const TwoByTwo pooled = crosstab(records, kind);
    rows.push_back({std::nullopt, kind, pooled, log_odds_ratio(pooled)});
    for (int y : years) {
      const TwoByTwo t = crosstab(records, kind, y);
      rows.push_back({y, kind, t, log_odds_ratio(t)});
    }
  }
  return rows;
}

void write_association(std::ostream& out, std::span<const AssociationRow> rows) {
  csv::Writer w(out);
  w.row({"scope", "low_kind", "a", "b", "c", "d", "estimate", "ci_low", "ci_high", "corrected"});
  for (const auto& r : rows) {
    const std::string scope = r.year ? std::to_string(*r.year) : "overall";
    std::vector<std::string> fields{scope, std::string(to_string(r.low_kind)),
                                    std::to_string(r.table.a), std::to_string(r.table.b),
                                    std::to_string(r.table.c), std::to_string(r.table.d)};
    if (r.result) {
      fields.push_back(format_double(r.result->estimate));
      fields.push_back(format_double(r.result->ci_low));
      fields.push_back(format_double(r.result->ci_high));
      fields.push_back(r.result->corrected ? "1" : "0");
    } else {
      fields.insert(fields.end(), {"undefined", "undefined", "undefined", "0"});
    }
    w.row(fields);
  }
}

}  // namespace riskprof
