#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <system_error>

namespace sslab {

/// Round-trip safe, locale-independent float formatting (17 significant digits).
inline std::string format_g17(double v) {
    char buf[64];
    const auto res =
        std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace sslab
