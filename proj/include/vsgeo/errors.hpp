#ifndef VSGEO_ERRORS_HPP
#define VSGEO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vsgeo {

// User-facing input problems (bad files, bad flags, bad shapes) exit the
// CLI with code 1; numeric failures (singular systems, failed fits) with 2.

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : Error {
  using Error::Error;
};

struct SchemaError : Error {
  using Error::Error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct ParameterError : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

struct SingularityError : NumericError {
  using NumericError::NumericError;
};

struct CovarianceError : NumericError {
  using NumericError::NumericError;
};

struct FitError : NumericError {
  FitError(const std::string& msg, double best) : NumericError(msg), best_objective(best) {}
  double best_objective;
};

struct EstimationError : NumericError {
  using NumericError::NumericError;
};

}  // namespace vsgeo

#endif
