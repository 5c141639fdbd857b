#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "riskprof/records.hpp"

namespace riskprof {

/// Cross-classification of a low-severity flag X against the regulated flag Y.
struct TwoByTwo {
  long a = 0;  // X=1, Y=1
  long b = 0;  // X=1, Y=0
  long c = 0;  // X=0, Y=1
  long d = 0;  // X=0, Y=0

  long total() const { return a + b + c + d; }
};

struct LogOddsResult {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  /// Haldane-Anscombe +0.5 applied to all cells because some cell was zero.
  bool corrected = false;
};

inline constexpr double kZ95 = 1.96;

/// Throws std::invalid_argument when low_kind is Regulated or Combined.
TwoByTwo crosstab(std::span<const InspectionRecord> records, InterceptionKind low_kind,
                  std::optional<int> year = std::nullopt);

/// Normal-approximation log odds ratio with a 95% interval. Empty when the
/// table has an entirely empty row or column (association undefined).
std::optional<LogOddsResult> log_odds_ratio(const TwoByTwo& t);

struct AssociationRow {
  std::optional<int> year;  // empty = pooled over all years
  InterceptionKind low_kind = InterceptionKind::NonRegulated;
  TwoByTwo table;
  std::optional<LogOddsResult> result;
};

/// Overall and per-year rows for both low-severity kinds.
std::vector<AssociationRow> association_table(std::span<const InspectionRecord> records);

void write_association(std::ostream& out, std::span<const AssociationRow> rows);

}  // namespace riskprof
