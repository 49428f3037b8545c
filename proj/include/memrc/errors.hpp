#pragma once

#include <stdexcept>
#include <string>

namespace memrc {

// Bad user/config input: malformed values, non-finite numbers, shape
// mismatches.  The CLI maps this to exit code 2.
struct invalid_input : std::runtime_error {
    explicit invalid_input(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: singular fits, diverging training, degenerate data.
// The CLI maps this to exit code 3.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace memrc
