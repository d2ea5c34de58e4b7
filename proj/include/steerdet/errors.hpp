#ifndef STEERDET_ERRORS_HPP
#define STEERDET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace steerdet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape of an operand does not match the declared party dimensions.
struct DimensionError : Error {
  using Error::Error;
};

// Input fails the Hermiticity tolerance (1e-9 by default).
struct HermiticityError : Error {
  using Error::Error;
};

// A numeric parameter is outside its admissible range.
struct ParamError : Error {
  using Error::Error;
};

// Scenario (trust pattern / class / level) not supported.
struct ScenarioError : Error {
  using Error::Error;
};

// Operation requires a solver/detection state that is not present.
struct StateError : Error {
  using Error::Error;
};

// Requested relaxation exceeds the configured memory budget.
struct ResourceError : Error {
  using Error::Error;
};

// Tomography settings are incomplete for linear inversion.
struct TomographyError : Error {
  using Error::Error;
};

// Bisection found no sign change of the detection verdict on [0,1].
struct NoThresholdError : Error {
  using Error::Error;
};

}  // namespace steerdet

#endif
