#pragma once

#include <stdexcept>
#include <string>

namespace negeval {

// Exit-code contract shared with the CLI: 0 success, 2 data/validation/config
// error, 3 I/O error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem-level failures: missing files, unreadable paths, short writes.
class IoError : public Error {
 public:
  using Error::Error;
};

// Input that does not match the format grammar (bad JSON, non-numeric score,
// truncated binary payload).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a declared invariant (duplicate id,
// negative appearing among positives, zero-norm embedding row).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A requested identifier is absent; messages list every missing id.
class LookupError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Arguments outside an operation's domain (negative capacity input,
// non-positive temperature, zero-variance correlation).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Mismatched dimensions between vectors or matrices.
class ShapeError : public DomainError {
 public:
  using DomainError::DomainError;
};

// A computation that would silently produce infinity is rejected instead.
class OverflowError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Bad run configuration: unknown plan, unknown format, conflicting flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline int exit_code_for(const std::exception& e) {
  return dynamic_cast<const IoError*>(&e) != nullptr ? 3 : 2;
}

}  // namespace negeval
