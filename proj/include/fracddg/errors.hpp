#ifndef FRACDDG_ERRORS_HPP_
#define FRACDDG_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace fracddg {

/// Argument lies outside the mathematical domain of an operation (x <= 0 for
/// Gamma, a point outside the mesh, a >= b, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A discretization or algorithm parameter is out of its supported range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Time integration produced a non-finite state.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Run configuration failed schema validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data for a post-processing routine is invalid (e.g. a non-positive
/// error passed to an order computation).
class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace fracddg

#endif  // FRACDDG_ERRORS_HPP_
