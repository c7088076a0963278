#pragma once

#include <stdexcept>
#include <string>

namespace toaloc {

// Error taxonomy. The CLI maps each family onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid options or parameters supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input files.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Degenerate sensor geometry or a numerical breakdown in a solver.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace toaloc
