#pragma once

#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "riskprof/beta_binomial.hpp"
#include "riskprof/model_rows.hpp"
#include "riskprof/records.hpp"

namespace riskprof::testing {

inline InspectionRecord record(std::string s, std::string t, int year, bool reg, bool non = false,
                               bool adm = false) {
  return {std::move(s), std::move(t), year, reg, non, adm};
}

inline std::vector<InspectionRecord> random_records(std::mt19937_64& rng, int count, int suppliers,
                                                    int tariffs, int first_year, int years) {
  std::uniform_int_distribution<int> s(0, suppliers - 1), t(0, tariffs - 1), y(0, years - 1);
  std::bernoulli_distribution coin(0.3);
  std::vector<InspectionRecord> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(record("S" + std::to_string(s(rng)), "T" + std::to_string(t(rng)),
                         first_year + y(rng), coin(rng), coin(rng), coin(rng)));
  }
  return out;
}

/// Aggregate, smooth and join records into model rows, as the smooth stage does.
inline std::vector<ModelRow> model_rows_from(std::span<const InspectionRecord> records,
                                             const YearWindow& window) {
  const auto regulated = aggregate(records, InterceptionKind::Regulated);
  const auto reg = smooth_cells(regulated);
  const auto non = smooth_cells(aggregate(records, InterceptionKind::NonRegulated));
  const auto adm = smooth_cells(aggregate(records, InterceptionKind::Administrative));
  return build_model_rows(regulated, PriorYearRates{&reg, &non, &adm}, window);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("riskprof_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace riskprof::testing
