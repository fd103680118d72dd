#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace paramsynth {

/// Exact rational number used for every symbolic quantity (expressions,
/// thresholds, box bounds). Solver-facing buffers use double.
using Rational = boost::multiprecision::cpp_rational;

/// Parses `a/b`, integers and decimal literals (optionally with an exponent,
/// e.g. `1e-5`) exactly. Returns nullopt on malformed input.
std::optional<Rational> parse_rational(std::string_view text);

/// `n` or `n/d` in lowest terms.
std::string to_string(const Rational& value);

double to_double(const Rational& value);

/// Exact rational value of a double.
Rational from_double(double value);

/// Shortest decimal string that round-trips to the same double.
std::string format_decimal(double value);

/// Rational equal to the shortest round-trip decimal of `value`. Used to turn
/// solver output into instantiations that print and re-parse identically.
Rational decimal_rational(double value);

} // namespace paramsynth
