#ifndef SPAMISS_ERRORS_HPP
#define SPAMISS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace spamiss {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad arguments to a numerical primitive (non-finite input, dimension mismatch).
struct InvalidInputError : Error {
  using Error::Error;
};

// Bad parameter value for a kernel or prior (e.g. exponential range <= 0).
struct InvalidParameterError : Error {
  using Error::Error;
};

// Cholesky pivot fell below tolerance; also the CAR singularity error.
struct NotPositiveDefiniteError : Error {
  using Error::Error;
};

// A model/data cross-check failed; `kind` names the violated invariant.
struct ValidationError : Error {
  std::string kind;
  ValidationError(std::string kind_, const std::string& msg)
      : Error(kind_ + ": " + msg), kind(std::move(kind_)) {}
};

// Config file syntax error, with 1-based line number.
struct ParseError : Error {
  int line;
  ParseError(int line_, const std::string& msg)
      : Error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

// Dataset file does not match the expected column schema.
struct SchemaError : Error {
  using Error::Error;
};

// Numerical failure inside a chain; iteration index attached when known.
struct NumericalError : Error {
  long iteration = -1;
  explicit NumericalError(const std::string& msg) : Error(msg) {}
  NumericalError(long iter, const std::string& msg)
      : Error("iteration " + std::to_string(iter) + ": " + msg), iteration(iter) {}
};

struct InvalidStateError : Error {
  using Error::Error;
};

// A recorded likelihood value of zero makes the harmonic-mean CPO estimate undefined.
struct DegenerateLikelihoodError : Error {
  using Error::Error;
};

// Requested criterion needs draws that this chain did not produce.
struct CriterionUnavailableError : Error {
  using Error::Error;
};

struct CannotInitializeError : Error {
  using Error::Error;
};

// Calibration could not reach the target rates; message carries best found rates.
struct CalibrationError : Error {
  using Error::Error;
};

}  // namespace spamiss

#endif
