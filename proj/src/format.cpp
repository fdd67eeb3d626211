#include "polylearn/format.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "polylearn/error.hpp"

namespace polylearn {

std::string format_double(double x) {
    if (x == 0.0) return std::signbit(x) ? "-0" : "0";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc()) throw NumericError("cannot format a double");
    return std::string(buf.data(), end);
}

namespace {

[[noreturn]] void bad(std::string_view text, std::string_view what, std::string_view kind) {
    throw ParseError("cannot parse " + std::string(what) + " '" + std::string(text) + "' as " + std::string(kind));
}

}  // namespace

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(std::string_view text, std::string_view what) {
    std::string_view t = trim(text);
    if (!t.empty() && t.front() == '+') t.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) bad(text, what, "a real number");
    return v;
}

long long parse_int(std::string_view text, std::string_view what) {
    std::string_view t = trim(text);
    if (!t.empty() && t.front() == '+') t.remove_prefix(1);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) bad(text, what, "an integer");
    return v;
}

unsigned long long parse_u64(std::string_view text, std::string_view what) {
    std::string_view t = trim(text);
    unsigned long long v = 0;
    int base = 10;
    if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) {
        t.remove_prefix(2);
        base = 16;
    }
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v, base);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) bad(text, what, "an unsigned 64-bit integer");
    return v;
}

}  // namespace polylearn
