#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace addsr {

// Bad or inconsistent run configuration. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss or other numeric breakdown at runtime. CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace addsr
