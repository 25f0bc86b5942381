#pragma once

#include <stdexcept>
#include <string>

namespace sau {

// Shape or rank disagreement between tensors.
struct ShapeError : std::invalid_argument {
  explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Input outside the documented domain of an operation.
struct DomainError : std::domain_error {
  explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

// API misuse (e.g. backward on a non-scalar loss).
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Non-finite value where a finite one is required.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Exact solver requested on a set it cannot enumerate.
struct SolverMismatchError : std::invalid_argument {
  explicit SolverMismatchError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed or truncated input file.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint failed its checksum.
struct CorruptFileError : std::runtime_error {
  explicit CorruptFileError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint written by an unknown format version.
struct VersionError : std::runtime_error {
  explicit VersionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint does not match the expected model configuration.
struct ConfigMismatchError : std::runtime_error {
  explicit ConfigMismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

// Paired files disagree (e.g. image/label counts).
struct ConsistencyError : std::runtime_error {
  explicit ConsistencyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Poison selection asked for more samples than are eligible.
struct PoolExhaustedError : std::runtime_error {
  explicit PoolExhaustedError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sau
