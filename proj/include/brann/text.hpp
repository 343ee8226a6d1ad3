#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace brann::text {

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Strict parse: the whole (trimmed) field must be a number. Throws
/// InvalidInput on failure.
double parse_double(std::string_view field);
long long parse_int(std::string_view field);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace brann::text
