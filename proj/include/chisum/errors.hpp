#pragma once

#include <stdexcept>
#include <string>

namespace chisum {

/// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument is outside the documented domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A series or iteration hit its term ceiling.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// Two exponential rates coincide where the convolution algebra needs them distinct.
class EqualRates : public Error {
 public:
  using Error::Error;
};

/// No Taylor order within the degree cap satisfies the error budget.
class BudgetUnreachable : public Error {
 public:
  using Error::Error;
};

/// Sampled densities on incompatible grids.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace chisum
