#pragma once

#include <stdexcept>
#include <string>

namespace jpsnhmm {

/// Input outside an operation's mathematical domain (zero vector, r <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed user input: CSV rows, config files, generative specs.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown: non-PD covariance, non-finite log density.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Request outside what an operation supports (e.g. quadrature above oracle scale).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace jpsnhmm
