#pragma once

#include <stdexcept>
#include <string>

namespace qcl {

// Requested size exceeds what the backend can represent (qubit counts,
// dense-diagonalization dimension).
struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Ill-formed inputs: index out of range, dimension mismatch, malformed circuit.
struct StructuralError : std::runtime_error {
    explicit StructuralError(const std::string& msg) : std::runtime_error(msg) {}
};

// Semantically invalid argument values (empty dataset, bad thresholds).
struct ArgumentError : std::runtime_error {
    explicit ArgumentError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dataset generation produced an unusable result (e.g. all samples in the
// dead band); caller should re-draw randomness.
struct GenerationError : std::runtime_error {
    explicit GenerationError(const std::string& msg) : std::runtime_error(msg) {}
};

// File access or format problems, including checkpoint version mismatches.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad experiment configuration.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qcl
