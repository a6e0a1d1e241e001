#pragma once

#include <stdexcept>
#include <string>

namespace sratio {

/// Invalid input data or a violated precondition on values.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A learner could not produce a model (e.g. all-zero weights, one effective class).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sratio
