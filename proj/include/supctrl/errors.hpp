#pragma once

#include <stdexcept>
#include <string>

namespace supctrl {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonCommensurateStep : Error {
  using Error::Error;
};
struct UnknownProblem : Error {
  using Error::Error;
};
struct OutOfDomain : Error {
  using Error::Error;
};
struct BadSharpness : Error {
  using Error::Error;
};
struct EmptyInput : Error {
  using Error::Error;
};
struct EmptyWindow : Error {
  using Error::Error;
};
struct NonFinite : Error {
  using Error::Error;
};
struct MissingWeights : Error {
  using Error::Error;
};
struct BadBounds : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

// Fixed-point iteration ran out of iterations; carries the last residual.
struct NoConvergence : Error {
  NoConvergence(const std::string& what, double residual)
      : Error(what), last_residual(residual) {}
  double last_residual;
};

}  // namespace supctrl
