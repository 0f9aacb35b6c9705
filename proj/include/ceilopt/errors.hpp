#pragma once

#include <stdexcept>
#include <string>

namespace ceilopt {

// Invalid geometry, discretization or configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Singular systems, NaN losses, diverging runs.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse, e.g. backward twice through the same graph.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ceilopt
