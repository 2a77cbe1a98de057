#pragma once

#include <stdexcept>
#include <string>

namespace srcinv {

/// Malformed input data (bad row/column in a delimited file, bad file format).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structurally valid input that violates a documented invariant.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace srcinv
