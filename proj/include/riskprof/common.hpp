#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace riskprof {

/// Bad input or configuration. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a usable result. Maps to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InterceptionKind : std::uint8_t { Regulated, NonRegulated, Administrative, Combined };

inline constexpr std::array<InterceptionKind, 4> kAllKinds{
    InterceptionKind::Regulated, InterceptionKind::NonRegulated,
    InterceptionKind::Administrative, InterceptionKind::Combined};

std::string_view to_string(InterceptionKind kind);
InterceptionKind parse_kind(std::string_view text);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);
/// Fixed-point rendering for display columns.
std::string format_fixed(double value, int decimals);

}  // namespace riskprof
