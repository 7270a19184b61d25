#pragma once

#include <stdexcept>
#include <string>

namespace quinv {

// Bad input: parameters out of range, malformed files, wrong shapes.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A moment needed by a formula or conversion is absent from the input set.
struct MissingMomentError : ValidationError {
    using ValidationError::ValidationError;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace quinv
