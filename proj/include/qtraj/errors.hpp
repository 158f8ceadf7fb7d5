#pragma once

#include <stdexcept>
#include <string>

namespace qtraj {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPSD : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct NotTracePreserving : Error {
  using Error::Error;
};
struct NotStochastic : Error {
  using Error::Error;
};
struct UnknownLabel : Error {
  using Error::Error;
};
struct WordTooLong : Error {
  using Error::Error;
};
struct NoFixedPoint : Error {
  using Error::Error;
};
struct ZeroMap : Error {
  using Error::Error;
};
struct DegenerateDistribution : Error {
  using Error::Error;
};
struct FilterCollapse : Error {
  using Error::Error;
};
struct KernelConditionViolated : Error {
  using Error::Error;
};
struct ZeroPrefixProbability : Error {
  using Error::Error;
};
struct HorizonTooLarge : Error {
  using Error::Error;
};
struct TooManyAtoms : Error {
  using Error::Error;
};
struct AtomBudgetExceeded : Error {
  using Error::Error;
};
struct NotUnraveling : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};

}  // namespace qtraj
