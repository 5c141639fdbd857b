#include "riskprof/sampling_plan.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "riskprof/common.hpp"
#include "riskprof/csv.hpp"

namespace riskprof {

std::string_view to_string(CspMode mode) {
  switch (mode) {
    case CspMode::Census: return "census";
    case CspMode::Sampling: return "sampling";
    case CspMode::PostFailureCheck: return "post_failure_check";
  }
  return "unknown";
}

CspState CspState::initial(int i, double f, int m) {
  CspState s;
  s.i = i;
  s.f = f;
  s.m = m;
  if (!s.valid()) throw std::invalid_argument("CSP-3: need i >= 1, 0 < f <= 1, m >= 1");
  return s;
}

bool CspState::valid() const {
  if (i < 1 || !(f > 0.0 && f <= 1.0) || m < 1) return false;
  if (clearances < 0 || clearances >= i) return false;
  if (check_remaining < 0 || check_remaining > m) return false;
  if (watch_remaining < 0 || watch_remaining > i) return false;
  switch (mode) {
    case CspMode::Census: return check_remaining == 0 && watch_remaining == 0;
    case CspMode::Sampling: return clearances == 0 && check_remaining == 0;
    case CspMode::PostFailureCheck:
      return clearances == 0 && check_remaining > 0 && watch_remaining == 0;
  }
  return false;
}

CspStep scheme_step(const CspState& state, std::optional<bool> outcome, double u_next) {
  if (!state.valid()) throw std::invalid_argument("CSP-3: malformed state");
  if (!(u_next >= 0.0 && u_next < 1.0)) throw std::invalid_argument("CSP-3: u_next outside [0,1)");
  CspState next = state;
  switch (state.mode) {
    case CspMode::Census:
      if (!outcome) throw std::invalid_argument("CSP-3: census consignment was not inspected");
      if (*outcome) {
        next.clearances = 0;
      } else if (++next.clearances == state.i) {
        next.mode = CspMode::Sampling;
        next.clearances = 0;
      }
      break;
    case CspMode::Sampling:
      if (outcome) {
        if (*outcome) {
          next.mode = state.watch_remaining > 0 ? CspMode::Census : CspMode::PostFailureCheck;
          next.check_remaining = next.mode == CspMode::PostFailureCheck ? state.m : 0;
          next.watch_remaining = 0;
        } else if (next.watch_remaining > 0) {
          --next.watch_remaining;
        }
      }
      break;
    case CspMode::PostFailureCheck:
      if (!outcome) throw std::invalid_argument("CSP-3: check consignment was not inspected");
      if (*outcome) {
        next.mode = CspMode::Census;
        next.check_remaining = 0;
      } else if (--next.check_remaining == 0) {
        next.mode = CspMode::Sampling;
        next.watch_remaining = state.i;
      }
      break;
  }
  const bool inspect = next.mode != CspMode::Sampling || u_next < state.f;
  return {next, inspect};
}

std::string Scheme::label() const {
  switch (kind) {
    case SchemeKind::Census: return "census";
    case SchemeKind::Random: return "random";
    case SchemeKind::Csp3: return "csp3";
  }
  return "unknown";
}

std::string Scheme::params() const {
  switch (kind) {
    case SchemeKind::Census: return "";
    case SchemeKind::Random: return "f=" + format_double(f);
    case SchemeKind::Csp3:
      return "i=" + std::to_string(i) + ";f=" + format_double(f) + ";m=" + std::to_string(m);
  }
  return "";
}

SchemeMetrics run_scheme(std::span<const std::uint8_t> contaminated, const Scheme& scheme,
                         std::uint64_t seed) {
  if (scheme.kind == SchemeKind::Random && !(scheme.f >= 0.0 && scheme.f <= 1.0)) {
    throw std::invalid_argument("random scheme: f outside [0,1]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  SchemeMetrics m;
  m.scheme = scheme.label();
  m.params = scheme.params();
  m.consignments = static_cast<long>(contaminated.size());

  CspState state;
  bool inspect_next = true;
  if (scheme.kind == SchemeKind::Csp3) state = CspState::initial(scheme.i, scheme.f, scheme.m);

  for (std::uint8_t flag : contaminated) {
    const bool bad = flag != 0;
    bool inspect = true;
    if (scheme.kind == SchemeKind::Random) inspect = unif(rng) < scheme.f;
    if (scheme.kind == SchemeKind::Csp3) inspect = inspect_next;
    if (bad) ++m.contaminated;
    if (inspect) {
      ++m.inspections;
      if (bad) ++m.detections;
    }
    if (scheme.kind == SchemeKind::Csp3) {
      const auto step = scheme_step(state, inspect ? std::optional<bool>(bad) : std::nullopt,
                                    unif(rng));
      state = step.state;
      inspect_next = step.inspect_next;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.ipd = m.detections > 0 ? static_cast<double>(m.inspections) / m.detections : nan;
  m.leakage = m.contaminated > 0
                  ? static_cast<double>(m.contaminated - m.detections) / m.contaminated
                  : nan;
  m.effort = m.consignments > 0 ? static_cast<double>(m.inspections) / m.consignments : nan;
  return m;
}

void write_metrics(std::ostream& out, std::span<const SchemeMetrics> metrics) {
  csv::Writer w(out);
  w.row({"scheme", "params", "consignments", "contaminated", "inspections", "detections", "ipd",
         "leakage", "effort"});
  for (const auto& m : metrics) {
    w.row({m.scheme, m.params, std::to_string(m.consignments), std::to_string(m.contaminated),
           std::to_string(m.inspections), std::to_string(m.detections), format_double(m.ipd),
           format_double(m.leakage), format_double(m.effort)});
  }
}

}  // namespace riskprof
