#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace reportminer {

// Verbosity from REPORTMINER_LOG: 0 = warnings only (default), 1 = info,
// 2 = debug. Diagnostics always go to stderr, never stdout.
inline int log_level() {
    static const int level = [] {
        const char* env = std::getenv("REPORTMINER_LOG");
        if (!env) return 0;
        std::string v(env);
        if (v == "debug" || v == "2") return 2;
        if (v == "info" || v == "1") return 1;
        return 0;
    }();
    return level;
}

inline void log_warn(const std::string& msg) {
    std::cerr << "[warn] " << msg << '\n';
}

inline void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[info] " << msg << '\n';
}

inline void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[debug] " << msg << '\n';
}

}  // namespace reportminer
