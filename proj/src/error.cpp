#include "biflow/error.hpp"

namespace biflow {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::SingularDiagonal: return "SingularDiagonal";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::BracketNotFound: return "BracketNotFound";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::BadModel: return "BadModel";
    case ErrorCode::Io: return "Io";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::NotSymmetric:
    case ErrorCode::SingularDiagonal:
    case ErrorCode::SingularMatrix:
    case ErrorCode::BracketNotFound:
    case ErrorCode::DivergedLoss:
      return ErrorCategory::Numerical;
    case ErrorCode::InvalidArgument:
      return ErrorCategory::Usage;
    default:
      return ErrorCategory::Data;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace biflow
