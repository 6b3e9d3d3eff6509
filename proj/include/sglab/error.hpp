#pragma once

#include <stdexcept>
#include <string>

namespace sglab {

/// Failure kinds raised by the numerical modules. The numeric values are part
/// of the C API (see sglab.h) and must not be reordered.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 10,
  Io = 11,
  Config = 12,
  GridMismatch = 13,
  InsufficientSamples = 14,

  NonConvergence = 20,
  LostConvexity = 21,
  BadDensity = 22,
  NonConvexInput = 23,
  SolverStall = 24,
  IndefiniteOperator = 25,
  CflViolation = 26,
  DegenerateMap = 27,
  FactorizationResidualTooLarge = 28,

  SectionWrapsTorus = 30,
  EmptySection = 31,
  DegenerateSection = 32,
  ResidualTooLarge = 33,
  NegativeInput = 34,
  ZeroEnergy = 35,

  InvariantViolation = 40,
};

const char* error_name(ErrorCode code) noexcept;

/// Process exit status for an error: 1 config, 2 solver, 3 invariant.
int exit_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sglab
