#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace rotograb {

/// Shortest text that parses back to exactly `x`. Locale independent.
std::string format_exact(double x);

/// Fixed number of decimals. Locale independent; never prints "-0".
std::string format_fixed(double x, int decimals);

/// Whole-string parse of a decimal number (surrounding spaces allowed).
std::optional<double> parse_double(std::string_view text);

}  // namespace rotograb
