#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace riskprof {

enum class CspMode { Census, Sampling, PostFailureCheck };

std::string_view to_string(CspMode mode);

/// CSP-3 state. `clearances` counts consecutive clean inspections in census
/// mode; `check_remaining` counts the post-failure check run; `watch_remaining`
/// counts inspections left in the trailing window after a clean check, during
/// which a failure reverts to census.
struct CspState {
  CspMode mode = CspMode::Census;
  int clearances = 0;
  int check_remaining = 0;
  int watch_remaining = 0;
  int i = 20;
  double f = 0.25;
  int m = 4;

  static CspState initial(int i, double f, int m);
  bool valid() const;
};

struct CspStep {
  CspState state;
  bool inspect_next = true;
};

/// Advances the plan past one consignment. `outcome` is the inspection result
/// (true = contaminated) or empty when the consignment was not inspected.
/// `u_next` in [0,1) decides sampling of the next consignment. Throws
/// std::invalid_argument for a malformed state or a skipped consignment that
/// the plan required to inspect.
CspStep scheme_step(const CspState& state, std::optional<bool> outcome, double u_next);

enum class SchemeKind { Census, Random, Csp3 };

struct Scheme {
  SchemeKind kind = SchemeKind::Census;
  double f = 1.0;
  int i = 20;
  int m = 4;

  static Scheme census() { return {SchemeKind::Census, 1.0, 0, 0}; }
  static Scheme random(double f) { return {SchemeKind::Random, f, 0, 0}; }
  static Scheme csp3(int i, double f, int m) { return {SchemeKind::Csp3, f, i, m}; }
  std::string label() const;
  std::string params() const;
};

struct SchemeMetrics {
  std::string scheme;
  std::string params;
  long consignments = 0;
  long contaminated = 0;
  long inspections = 0;
  long detections = 0;
  double ipd = 0.0;      // NaN without detections
  double leakage = 0.0;  // NaN without contaminated consignments
  double effort = 0.0;
};

/// Runs a scheme over a stream of true contamination flags in arrival order.
SchemeMetrics run_scheme(std::span<const std::uint8_t> contaminated, const Scheme& scheme,
                         std::uint64_t seed);

void write_metrics(std::ostream& out, std::span<const SchemeMetrics> metrics);

}  // namespace riskprof
