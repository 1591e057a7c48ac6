#pragma once

#include <stdexcept>
#include <string>

namespace entangle {

// Invalid or unresolvable configuration (CLI exit code 1).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent data: files, dimensions, contract violations
// on inputs (CLI exit code 2).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finite arithmetic is required; training aborts
// rather than silently producing NaNs (CLI exit code 3).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace entangle
