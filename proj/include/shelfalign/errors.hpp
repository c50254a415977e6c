#pragma once

#include <stdexcept>
#include <string>

namespace shelfalign {

/// File could not be opened or read.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// File content is not in a supported format.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Structured input (feature file, JSON schema) violates its contract.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Detections violate a planogram formation constraint.
struct ConstraintError : std::runtime_error {
    explicit ConstraintError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace shelfalign
