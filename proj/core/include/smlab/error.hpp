#pragma once

#include <stdexcept>
#include <string>

namespace smlab {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A document or value violates a stated invariant; the message names it.
struct ValidationError : Error {
  using Error::Error;
};

/// A caller broke a precondition (inconsistent matching, bad dimensions, ...).
struct ContractViolation : Error {
  using Error::Error;
};

/// An exhaustive routine was asked to run beyond its size limit.
struct SizeGuardError : Error {
  using Error::Error;
};

/// Numerical failure during training (NaN loss, non-finite parameters).
struct TrainingError : Error {
  using Error::Error;
};

}  // namespace smlab
