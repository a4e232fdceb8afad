#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ambidoc::text {

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string_view trim(std::string_view s);
bool starts_with_icase(std::string_view s, std::string_view prefix);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Shortest decimal that round-trips; integral values print without ".0".
std::string format_number(double v);

// Round-half-up of 100*num/den to one decimal place, computed exactly.
// den must be positive. Returns e.g. "26.7".
std::string percent_one_decimal(long long num, long long den);

}  // namespace ambidoc::text
