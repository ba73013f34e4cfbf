#pragma once

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>

namespace wpt::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

/// Threshold from the WPT_LOG environment variable (debug|info|warn|error|off),
/// read once; defaults to warn.
inline Level threshold() {
    static const Level level = [] {
        const char* env = std::getenv("WPT_LOG");
        if (!env) return Level::warn;
        if (!std::strcmp(env, "debug")) return Level::debug;
        if (!std::strcmp(env, "info")) return Level::info;
        if (!std::strcmp(env, "warn")) return Level::warn;
        if (!std::strcmp(env, "error")) return Level::error;
        if (!std::strcmp(env, "off")) return Level::off;
        return Level::warn;
    }();
    return level;
}

inline void write(Level level, const std::string& msg) {
    if (level < threshold()) return;
    static const char* names[] = {"debug", "info", "warn", "error"};
    std::cerr << "[wpt " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void debug(const std::string& msg) { write(Level::debug, msg); }
inline void info(const std::string& msg) { write(Level::info, msg); }
inline void warn(const std::string& msg) { write(Level::warn, msg); }
inline void error(const std::string& msg) { write(Level::error, msg); }

}  // namespace wpt::log
