#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "riskprof/records.hpp"

namespace riskprof {

struct SimConfig {
  int suppliers = 200;
  int tariffs = 20;
  int years = 5;
  int first_year = 2005;
  /// Distinct tariffs each supplier imports.
  int tariffs_per_supplier = 3;
  /// Consignments per (supplier, tariff, year) are negative binomial with
  /// this mean and size (gamma-Poisson); zero-count cells are absent.
  double consignments_mean = 6.0;
  double consignments_size = 2.0;

  double beta0 = -1.5;
  double sigma_supplier = 0.0;
  double sigma_tariff = 0.0;
  double sigma_year = 0.0;
  double sigma_supplier_tariff = 0.0;
  double sigma_supplier_year = 0.0;

  /// Randomly chosen suppliers whose effect is raised by planted_offset.
  int planted_count = 0;
  double planted_offset = 0.0;

  /// Low-severity flags: logit = base + strength * regulated flag.
  double association_strength = 1.0;
  double non_regulated_base = -2.0;
  double administrative_base = -2.5;

  std::uint64_t seed = 1;

  /// Every violated constraint, empty when valid.
  std::vector<std::string> violations() const;
};

/// One drawn effect. group is supplier, tariff, year, supplier_tariff or
/// supplier_year; level uses the same keys as the model design.
struct TruthEffect {
  std::string group;
  std::string level;
  double effect = 0.0;
  bool planted = false;
};

struct Pathway {
  std::vector<InspectionRecord> records;  // arrival order
  std::vector<TruthEffect> truth;
  std::vector<std::string> planted_suppliers;
};

std::string supplier_name(int index);
std::string tariff_name(int index);

/// Throws ValidationError for an invalid config.
Pathway generate_pathway(const SimConfig& config);

/// Regulated flags drawn iid at `rate`, for inspection-scheme streams.
std::vector<std::uint8_t> bernoulli_stream(std::size_t count, double rate, std::uint64_t seed);

void write_truth(std::ostream& out, std::span<const TruthEffect> truth);
std::vector<TruthEffect> read_truth(std::istream& in);

}  // namespace riskprof
