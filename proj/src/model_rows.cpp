#include "riskprof/model_rows.hpp"

#include <istream>
#include <ostream>
#include <set>

#include "riskprof/csv.hpp"

namespace riskprof {

std::vector<ModelRow> attach_prior_year(std::span<const CellCounts> cells,
                                        const PriorYearRates& smoothed) {
  std::vector<ModelRow> rows;
  rows.reserve(cells.size());
  for (const auto& c : cells) {
    if (c.kind != InterceptionKind::Regulated) {
      throw ValidationError("attach_prior_year: expected regulated cells");
    }
    const int prev = c.year - 1;
    ModelRow row{c.supplier_id, c.tariff_id, c.year, c.x, c.n};
    double* targets[3] = {&row.prev_regulated_rate, &row.prev_non_regulated_rate,
                          &row.prev_administrative_rate};
    for (int k = 0; k < 3; ++k) {
      const SmoothedRates* rates = smoothed[k];
      if (rates == nullptr || !rates->covers_year(prev)) {
        throw ValidationError("attach_prior_year: smoothed rates do not cover year " +
                              std::to_string(prev));
      }
      if (auto r = rates->rate({c.supplier_id, c.tariff_id, prev})) {
        *targets[k] = *r;
      } else {
        *targets[k] = rates->imputed(c.tariff_id, prev);
        row.prev_imputed = true;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ModelRow> build_model_rows(std::span<const CellCounts> cells,
                                       const PriorYearRates& smoothed, const YearWindow& window) {
  std::vector<CellCounts> in_scope;
  for (const auto& c : cells) {
    if (c.year > window.first && c.year <= window.last) in_scope.push_back(c);
  }
  return attach_prior_year(in_scope, smoothed);
}

void write_model_rows(std::ostream& out, std::span<const ModelRow> rows) {
  csv::Writer w(out);
  w.row({"supplier_id", "tariff_id", "year", "x", "n", "prev_regulated_rate",
         "prev_non_regulated_rate", "prev_administrative_rate", "prev_imputed"});
  for (const auto& r : rows) {
    w.row({r.supplier_id, r.tariff_id, std::to_string(r.year), std::to_string(r.x),
           std::to_string(r.n), format_double(r.prev_regulated_rate),
           format_double(r.prev_non_regulated_rate), format_double(r.prev_administrative_rate),
           r.prev_imputed ? "1" : "0"});
  }
}

std::vector<ModelRow> read_model_rows(std::istream& in) {
  const csv::Table t = csv::read(in);
  const auto cs = t.column("supplier_id"), ct = t.column("tariff_id"), cy = t.column("year"),
             cx = t.column("x"), cn = t.column("n"), cr = t.column("prev_regulated_rate"),
             cnr = t.column("prev_non_regulated_rate"), ca = t.column("prev_administrative_rate"),
             ci = t.column("prev_imputed");
  std::vector<ModelRow> rows;
  rows.reserve(t.rows.size());
  for (const auto& f : t.rows) {
    rows.push_back({f[cs], f[ct], std::stoi(f[cy]), std::stoi(f[cx]), std::stoi(f[cn]),
                    std::stod(f[cr]), std::stod(f[cnr]), std::stod(f[ca]), f[ci] == "1"});
  }
  return rows;
}

}  // namespace riskprof
