#pragma once

#include <stdexcept>
#include <string>

namespace n2o {

// Three error families map onto the CLI exit codes (2, 3, 4).

/// Bad arguments or an inconsistent request (k too large, unknown embedder...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or mismatched input data (file format, provenance hash, zero vectors).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A condition the implementation guarantees was violated.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace n2o
