#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

namespace wsamp {

/// Shortest round-trip decimal form of a double; "inf"/"-inf"/"nan" otherwise.
inline std::string to_shortest(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

/// Strict full-string parse of a double (accepts "inf").
inline bool parse_double(std::string_view s, double& out) {
    if (s == "inf" || s == "+inf" || s == "infinity") {
        out = HUGE_VAL;
        return true;
    }
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto res = std::from_chars(first, s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

}  // namespace wsamp
