#pragma once

#include <stdexcept>
#include <string>

namespace jde {

/// Invalid point or parameter for a signal model (e.g. non-positive width).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Signal support falls outside the measurement.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Curvature matrix is not positive definite at the requested point.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace jde
