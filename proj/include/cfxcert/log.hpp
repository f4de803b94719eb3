#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>

namespace cfxcert::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

namespace detail {
inline Level initial_level() {
    if (const char* env = std::getenv("CFX_CERTIFY_LOG")) {
        std::string_view v(env);
        if (v == "error")
            return Level::error;
        if (v == "warn")
            return Level::warn;
        if (v == "info")
            return Level::info;
        if (v == "debug")
            return Level::debug;
    }
    return Level::warn;
}
inline Level& level_ref() {
    static Level lvl = initial_level();
    return lvl;
}
} // namespace detail

inline Level level() { return detail::level_ref(); }
inline void set_level(Level lvl) { detail::level_ref() = lvl; }

inline void write(Level lvl, const std::string& msg) {
    if (lvl > level())
        return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(lvl)], msg.c_str());
}

inline void error(const std::string& m) { write(Level::error, m); }
inline void warn(const std::string& m) { write(Level::warn, m); }
inline void info(const std::string& m) { write(Level::info, m); }
inline void debug(const std::string& m) { write(Level::debug, m); }

} // namespace cfxcert::log
