#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "riskprof/beta_binomial.hpp"
#include "riskprof/roc.hpp"

namespace riskprof {

enum class ProfileVariant { TariffSupplierRaw, SupplierWithinTariffMean, EbSmoothed };

std::string_view to_string(ProfileVariant variant);
ProfileVariant parse_variant(std::string_view text);

/// Year-y scores keyed by (supplier, tariff), with the imputation rule for
/// pairs absent in year y.
class Profile {
 public:
  Profile(int year, InterceptionKind kind, ProfileVariant variant,
          std::map<std::pair<std::string, std::string>, double> scores,
          std::map<std::string, double> tariff_fallback, double pooled_fallback);

  int year() const { return year_; }
  InterceptionKind kind() const { return kind_; }
  ProfileVariant variant() const { return variant_; }
  const auto& scores() const { return scores_; }

  /// Score for (s,t); sets *imputed when the pair is absent from year y.
  double score(const std::string& supplier_id, const std::string& tariff_id,
               bool* imputed = nullptr) const;

 private:
  int year_;
  InterceptionKind kind_;
  ProfileVariant variant_;
  std::map<std::pair<std::string, std::string>, double> scores_;
  std::map<std::string, double> tariff_fallback_;
  double pooled_fallback_;
};

/// Builds the year-y profile of one kind from its smoothed-rate table.
Profile build_profile(const SmoothedRates& rates, int year, ProfileVariant variant);

/// Per-inspection scored outcomes: each year-(y+1) regulated cell (x, n)
/// contributes x positives and n - x negatives at its (s,t) profile score.
std::vector<ScoredOutcome> score_outcomes(const Profile& profile,
                                          std::span<const CellCounts> outcomes,
                                          long* imputed_inspections = nullptr);

struct AcrossResult {
  int profile_year = 0;
  InterceptionKind kind = InterceptionKind::Regulated;
  ProfileVariant variant = ProfileVariant::EbSmoothed;
  RocCurve curve;
  long positives = 0;
  long negatives = 0;
  long imputed_inspections = 0;
};

/// ROC across all tariffs. `outcomes` are year-(y+1) regulated cells.
/// Propagates UndefinedAuc.
AcrossResult evaluate_across(const Profile& profile, std::span<const CellCounts> outcomes);

struct WithinTariffResult {
  std::string tariff_id;
  std::optional<double> auc;
  long fails = 0;  // regulated interceptions in the tariff's outcome year
  long inspections = 0;
  std::string skip_reason;  // non-empty when auc is absent
};

/// ROC within each tariff, suppliers as the ranked entities. Tariffs with one
/// supplier or a single outcome class are recorded as skipped.
std::vector<WithinTariffResult> evaluate_within_tariff(const Profile& profile,
                                                       std::span<const CellCounts> outcomes);

void write_across(std::ostream& out, std::span<const AcrossResult> results);
void write_roc_points(std::ostream& out, std::span<const AcrossResult> results);

struct WithinRow {
  int profile_year = 0;
  InterceptionKind kind = InterceptionKind::Regulated;
  ProfileVariant variant = ProfileVariant::EbSmoothed;
  WithinTariffResult result;
};
void write_within(std::ostream& out, std::span<const WithinRow> rows);

}  // namespace riskprof
