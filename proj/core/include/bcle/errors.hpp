#pragma once

#include <stdexcept>
#include <string>

namespace bcle {

// Parameter outside the admissible range of a type or operation.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The requested moment is infinite.
struct Divergent : std::domain_error {
  using std::domain_error::domain_error;
};

// Evaluation hit a pole of a meromorphic function.
struct PoleError : std::domain_error {
  using std::domain_error::domain_error;
};

// Valid input, but outside what this implementation supports.
struct Unsupported : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Quadrature or root finding did not converge.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bcle
