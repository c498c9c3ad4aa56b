#pragma once

#include <stdexcept>
#include <string>

namespace tofwave {

enum class ErrorCode {
  NoStableRoot,
  AmbiguousRoot,
  NonFiniteField,
  DimensionMismatch,
  NewtonDiverged,
  SingularJacobian,
  BoundaryTooTight,
  ContinuationStalled,
  InsufficientSamples,
  NoConvergence,
  BranchCollision,
  SingularA,
  NullSpaceAmbiguous,
  SolveFailed,
  NonFiniteState,
  DecompositionLost,
  NewtonFailed,
  DerivativeDegenerate,
  EmptyWindow,
  NonPositiveValues,
  TailNotSettled,
  QuadratureNotConverged,
  IterationDiverged,
  OutsideSmallnessBall,
  ParseError,
  UnknownKey,
  MissingRequired,
  InvalidArgument,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tofwave
