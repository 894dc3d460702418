#pragma once

#include <iostream>
#include <string>

namespace fleetcast::log {

// Diagnostics go to stderr so result files stay byte-deterministic.
inline bool& quiet() {
    static bool q = false;
    return q;
}

inline void warn(const std::string& msg) {
    if (!quiet()) std::cerr << "[warn] " << msg << '\n';
}

inline void info(const std::string& msg) {
    if (!quiet()) std::cerr << "[info] " << msg << '\n';
}

}  // namespace fleetcast::log
