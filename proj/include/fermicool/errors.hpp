#pragma once

#include <stdexcept>
#include <string>

namespace fermicool {

/// Invalid input or a violated cross-field constraint. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invariant violation or solver failure during a computation. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or parse failure on an input/output artifact. Exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fermicool
