#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "riskprof/common.hpp"

namespace riskprof {

/// Inclusive range of calendar years accepted as input.
struct YearWindow {
  int first = 0;
  int last = 0;
  bool contains(int year) const { return year >= first && year <= last; }
};

/// One inspected consignment.
struct InspectionRecord {
  std::string supplier_id;
  std::string tariff_id;
  int year = 0;
  bool regulated = false;
  bool non_regulated = false;
  bool administrative = false;

  friend bool operator==(const InspectionRecord&, const InspectionRecord&) = default;
};

/// True when any of the three interception types occurred.
bool combined_indicator(const InspectionRecord& r);

/// Flag value for a given interception kind (Combined uses the disjunction).
bool has_flag(const InspectionRecord& r, InterceptionKind kind);

/// Parses the inspection table (supplier_id,tariff_id,year,regulated,
/// non_regulated,administrative). Aborts on the first bad row, naming its row
/// number. When a window is supplied, out-of-window years are rejected too.
std::vector<InspectionRecord> parse_inspections(std::istream& in,
                                                std::optional<YearWindow> window = std::nullopt);

void write_inspections(std::ostream& out, std::span<const InspectionRecord> records);

struct CellKey {
  std::string supplier_id;
  std::string tariff_id;
  int year = 0;

  auto operator<=>(const CellKey&) const = default;
};

/// Interception count x out of n inspections for one supplier x tariff x year.
struct CellCounts {
  std::string supplier_id;
  std::string tariff_id;
  int year = 0;
  InterceptionKind kind = InterceptionKind::Regulated;
  int x = 0;
  int n = 0;

  CellKey key() const { return {supplier_id, tariff_id, year}; }
  friend bool operator==(const CellCounts&, const CellCounts&) = default;
};

/// One cell per distinct (supplier, tariff, year), sorted by that key.
/// Throws ValidationError on empty input.
std::vector<CellCounts> aggregate(std::span<const InspectionRecord> records, InterceptionKind kind);

void write_cells(std::ostream& out, std::span<const CellCounts> cells);
std::vector<CellCounts> read_cells(std::istream& in);

}  // namespace riskprof
