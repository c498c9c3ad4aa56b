#include "tofwave/errors.hpp"

namespace tofwave {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoStableRoot: return "NoStableRoot";
    case ErrorCode::AmbiguousRoot: return "AmbiguousRoot";
    case ErrorCode::NonFiniteField: return "NonFiniteField";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::BoundaryTooTight: return "BoundaryTooTight";
    case ErrorCode::ContinuationStalled: return "ContinuationStalled";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BranchCollision: return "BranchCollision";
    case ErrorCode::SingularA: return "SingularA";
    case ErrorCode::NullSpaceAmbiguous: return "NullSpaceAmbiguous";
    case ErrorCode::SolveFailed: return "SolveFailed";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::DecompositionLost: return "DecompositionLost";
    case ErrorCode::NewtonFailed: return "NewtonFailed";
    case ErrorCode::DerivativeDegenerate: return "DerivativeDegenerate";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::NonPositiveValues: return "NonPositiveValues";
    case ErrorCode::TailNotSettled: return "TailNotSettled";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::IterationDiverged: return "IterationDiverged";
    case ErrorCode::OutsideSmallnessBall: return "OutsideSmallnessBall";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::MissingRequired: return "MissingRequired";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace tofwave
