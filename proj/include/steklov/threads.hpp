#pragma once

#include <cstdlib>
#include <string>
#include <thread>

#include "steklov/errors.hpp"

namespace steklov {

/// Worker count for independent tasks: STEKLOV_THREADS if set, else the
/// hardware concurrency.
inline int worker_threads() {
    if (const char* env = std::getenv("STEKLOV_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 1024) throw DomainError("STEKLOV_THREADS must be a positive integer");
        return int(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

}  // namespace steklov
