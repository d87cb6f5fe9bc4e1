#pragma once

#include <stdexcept>

namespace lav {

// File and stream failures; the CLI maps these to its I/O exit code.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values or numerically impossible requests detected mid-run.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lav
