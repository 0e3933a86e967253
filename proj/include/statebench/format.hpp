#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace statebench {

/// Shortest decimal text that parses back to exactly `x`. Locale-independent.
std::string format_double(double x);

/// Fixed-point text with `digits` decimals. Locale-independent.
std::string format_fixed(double x, int digits);

/// Strict, locale-independent parse of the whole string; nullopt on any junk or non-finite value.
std::optional<double> parse_double(std::string_view text);

/// Splits on `sep` with no quoting rules.
std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');

}  // namespace statebench
