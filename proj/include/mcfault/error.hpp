#pragma once

#include <stdexcept>
#include <string>

namespace mcfault {

// Input outside the domain of a sampling or transform operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid configuration or precondition at an API boundary.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Violated internal invariant; indicates a bug in the simulator.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mcfault
