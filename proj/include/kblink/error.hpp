#pragma once
// Error taxonomy shared by all modules. The CLI maps these to exit codes:
// ConfigError -> 1, DataError -> 2, NumericError -> 3.

#include <stdexcept>
#include <string>

namespace kblink {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace kblink
