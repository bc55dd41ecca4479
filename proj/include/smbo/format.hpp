#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace smbo {

/// Shortest round-trip decimal, independent of the C locale.
std::string format_double(double x);

/// Parses a whole string as a decimal number (surrounding ASCII whitespace
/// allowed). Locale independent.
std::optional<double> parse_double(std::string_view text);

}  // namespace smbo
