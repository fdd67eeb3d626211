#pragma once

#include <string>
#include <string_view>

namespace polylearn {

/// Shortest decimal text that parses back to exactly x.
std::string format_double(double x);

/// Parses the whole of text as a double; throws ParseError naming `what` otherwise.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);
unsigned long long parse_u64(std::string_view text, std::string_view what);

std::string_view trim(std::string_view s);

}  // namespace polylearn
