#include "riskprof/records.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>

#include "riskprof/csv.hpp"

namespace riskprof {

namespace {

const std::vector<std::string> kRecordHeader{"supplier_id",   "tariff_id", "year", "regulated",
                                             "non_regulated", "administrative"};

std::string at_row(std::size_t row) { return "row " + std::to_string(row) + ": "; }

bool parse_flag(const std::string& text, std::size_t row, const std::string& column) {
  if (text == "0") return false;
  if (text == "1") return true;
  throw ValidationError(at_row(row) + "non-boolean value '" + text + "' in column " + column);
}

int parse_int(const std::string& text, std::size_t row, const std::string& column) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError(at_row(row) + "non-integer " + column + " '" + text + "'");
  }
  return value;
}

}  // namespace

bool combined_indicator(const InspectionRecord& r) {
  return r.regulated || r.non_regulated || r.administrative;
}

bool has_flag(const InspectionRecord& r, InterceptionKind kind) {
  switch (kind) {
    case InterceptionKind::Regulated: return r.regulated;
    case InterceptionKind::NonRegulated: return r.non_regulated;
    case InterceptionKind::Administrative: return r.administrative;
    case InterceptionKind::Combined: return combined_indicator(r);
  }
  return false;
}

std::vector<InspectionRecord> parse_inspections(std::istream& in, std::optional<YearWindow> window) {
  const csv::Table table = csv::read(in);
  std::vector<std::size_t> col;
  for (const auto& name : kRecordHeader) col.push_back(table.column(name));

  std::vector<InspectionRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const std::size_t row = i + 1;
    InspectionRecord r;
    r.supplier_id = f[col[0]];
    r.tariff_id = f[col[1]];
    if (r.supplier_id.empty() || r.tariff_id.empty()) {
      throw ValidationError(at_row(row) + "empty supplier_id or tariff_id");
    }
    r.year = parse_int(f[col[2]], row, "year");
    if (window && !window->contains(r.year)) {
      throw ValidationError(at_row(row) + "year " + std::to_string(r.year) + " outside window " +
                            std::to_string(window->first) + "-" + std::to_string(window->last));
    }
    r.regulated = parse_flag(f[col[3]], row, "regulated");
    r.non_regulated = parse_flag(f[col[4]], row, "non_regulated");
    r.administrative = parse_flag(f[col[5]], row, "administrative");
    records.push_back(std::move(r));
  }
  return records;
}

void write_inspections(std::ostream& out, std::span<const InspectionRecord> records) {
  csv::Writer w(out);
  w.row(kRecordHeader);
  for (const auto& r : records) {
    w.row({r.supplier_id, r.tariff_id, std::to_string(r.year), r.regulated ? "1" : "0",
           r.non_regulated ? "1" : "0", r.administrative ? "1" : "0"});
  }
}

std::vector<CellCounts> aggregate(std::span<const InspectionRecord> records, InterceptionKind kind) {
  if (records.empty()) throw ValidationError("aggregate: no inspection records");
  std::map<CellKey, std::pair<int, int>> counts;
  for (const auto& r : records) {
    auto& [x, n] = counts[CellKey{r.supplier_id, r.tariff_id, r.year}];
    ++n;
    if (has_flag(r, kind)) ++x;
  }
  std::vector<CellCounts> cells;
  cells.reserve(counts.size());
  for (const auto& [key, xn] : counts) {
    cells.push_back({key.supplier_id, key.tariff_id, key.year, kind, xn.first, xn.second});
  }
  return cells;
}

void write_cells(std::ostream& out, std::span<const CellCounts> cells) {
  csv::Writer w(out);
  w.row({"supplier_id", "tariff_id", "year", "kind", "x", "n"});
  for (const auto& c : cells) {
    w.row({c.supplier_id, c.tariff_id, std::to_string(c.year), std::string(to_string(c.kind)),
           std::to_string(c.x), std::to_string(c.n)});
  }
}

std::vector<CellCounts> read_cells(std::istream& in) {
  const csv::Table table = csv::read(in);
  const auto cs = table.column("supplier_id"), ct = table.column("tariff_id"),
             cy = table.column("year"), ck = table.column("kind"), cx = table.column("x"),
             cn = table.column("n");
  std::vector<CellCounts> cells;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    CellCounts c{f[cs], f[ct], parse_int(f[cy], i + 1, "year"), parse_kind(f[ck]),
                 parse_int(f[cx], i + 1, "x"), parse_int(f[cn], i + 1, "n")};
    if (c.x < 0 || c.n < 1 || c.x > c.n) {
      throw ValidationError(at_row(i + 1) + "counts violate 0 <= x <= n, n >= 1");
    }
    cells.push_back(std::move(c));
  }
  return cells;
}

}  // namespace riskprof
