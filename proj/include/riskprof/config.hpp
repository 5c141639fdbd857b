#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riskprof/glmm_fit.hpp"
#include "riskprof/profiling.hpp"
#include "riskprof/simulate.hpp"

namespace riskprof {

/// Settings for one pipeline run. Read from a `key = value` file; `#` starts
/// a comment. Every stochastic stage needs an explicit seed.
struct RunConfig {
  /// Inspection-record CSV. When absent, records come from the simulate stage.
  std::optional<std::filesystem::path> input;
  std::filesystem::path out = "out";
  std::optional<YearWindow> window;
  int workers = 1;

  std::vector<InterceptionKind> profile_kinds{kAllKinds.begin(), kAllKinds.end()};
  std::vector<ProfileVariant> profile_variants{ProfileVariant::TariffSupplierRaw,
                                               ProfileVariant::SupplierWithinTariffMean,
                                               ProfileVariant::EbSmoothed};

  std::vector<ModelId> models{kAllModels.begin(), kAllModels.end()};
  Priors priors;
  FitConfig fit;

  std::vector<ModelId> cv_models{ModelId::Base, ModelId::M3};
  int cv_folds = 5;
  int cv_repeats = 20;
  int cv_draws = 200;

  ModelId report_model = ModelId::M3;
  int report_count = 25;

  SimConfig sim;
  int csp_i = 20;
  double csp_f = 0.25;
  int csp_m = 4;

  std::optional<std::uint64_t> seed_simulate;
  std::optional<std::uint64_t> seed_fit;
  std::optional<std::uint64_t> seed_compare;

  /// Applies one setting; returns an error message for unknown keys or
  /// unparsable values.
  std::optional<std::string> set(const std::string& key, const std::string& value);

  /// Every violated constraint, empty when valid.
  std::vector<std::string> violations() const;

  /// Effective year window: the configured one, or the simulated years.
  YearWindow effective_window() const;

  /// Effective settings that affect artifacts, as sorted `key = value` lines.
  std::string canonical() const;
};

/// Parses a config stream, applies overrides, validates. Throws
/// ValidationError listing every problem found.
RunConfig load_config(std::istream& in, const std::map<std::string, std::string>& overrides = {});
RunConfig load_config_file(const std::filesystem::path& path,
                           const std::map<std::string, std::string>& overrides = {});

}  // namespace riskprof
