#pragma once

#include <charconv>
#include <string>
#include <system_error>

#include <json.hpp>

#include "cfxcert/common.hpp"

namespace cfxcert {

// Shortest decimal string that parses back to the identical double.
// Model files store parameters this way so round-trips are bit-exact.
inline std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

inline double parse_double_str(const std::string& s, const std::string& where) {
    double v;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ParseError(where + ": bad number \"" + s + "\"");
    return v;
}

// Accepts both native JSON numbers and decimal strings.
inline double json_number(const nlohmann::json& j, const std::string& where) {
    if (j.is_number())
        return j.get<double>();
    if (j.is_string())
        return parse_double_str(j.get<std::string>(), where);
    throw ParseError(where + ": expected a number");
}

} // namespace cfxcert
