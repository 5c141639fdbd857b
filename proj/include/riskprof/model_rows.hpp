#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "riskprof/beta_binomial.hpp"
#include "riskprof/records.hpp"

namespace riskprof {

/// A regulated-pest cell of year y joined with the EB-smoothed year y-1 rates
/// of its (supplier, tariff).
struct ModelRow {
  std::string supplier_id;
  std::string tariff_id;
  int year = 0;
  int x = 0;
  int n = 0;
  double prev_regulated_rate = 0.0;
  double prev_non_regulated_rate = 0.0;
  double prev_administrative_rate = 0.0;
  /// True when (supplier, tariff) had no cell in year y-1.
  bool prev_imputed = false;
};

/// Previous-year smoothed rates for the three base kinds, in the order
/// regulated, non-regulated, administrative.
using PriorYearRates = std::array<const SmoothedRates*, 3>;

/// Joins year-y regulated cells to year y-1 smoothed rates. Missing (s,t)
/// pairs get the tariff-year prior mean, or the pooled rate when the tariff
/// is absent too. Throws ValidationError if any rate set lacks year y-1.
std::vector<ModelRow> attach_prior_year(std::span<const CellCounts> regulated_cells_year_y,
                                        const PriorYearRates& smoothed);

/// Rows for every year in (window.first, window.last] present in the cells.
std::vector<ModelRow> build_model_rows(std::span<const CellCounts> regulated_cells,
                                       const PriorYearRates& smoothed, const YearWindow& window);

void write_model_rows(std::ostream& out, std::span<const ModelRow> rows);
std::vector<ModelRow> read_model_rows(std::istream& in);

}  // namespace riskprof
