#pragma once

#include <stdexcept>
#include <string>

namespace storysense {

// Bad configuration or usage. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unrecoverable runtime failure (I/O, malformed data, divergence). Exit code 1.
class FatalError : public std::runtime_error {
public:
    explicit FatalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace storysense
