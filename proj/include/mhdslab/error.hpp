#pragma once

#include <stdexcept>
#include <string>

namespace mhdslab {

enum class ErrorKind {
  InvalidSpec,
  ShapeMismatch,
  CflViolation,
  NonfiniteField,
  InsufficientSamples,
  OrderExceeded,
  UnderResolved,
  OutOfDomain,
  EmptyBand,
  NonpositiveValues,
  TooFewPoints,
  MismatchedSchedules,
  ZeroData,
  IoError,
  CorruptHeader,
  VersionMismatch,
  DimensionMismatch,
  InvalidState,
  Usage,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown by the stepper when the requested dt exceeds the advective limit.
class CflError : public Error {
 public:
  CflError(double requested, double required)
      : Error(ErrorKind::CflViolation,
              "dt=" + std::to_string(requested) + " exceeds CFL limit; use dt <= " +
                  std::to_string(required)),
        required_dt_(required) {}

  double required_dt() const noexcept { return required_dt_; }

 private:
  double required_dt_;
};

}  // namespace mhdslab
