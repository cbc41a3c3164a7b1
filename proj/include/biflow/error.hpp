#pragma once

#include <stdexcept>
#include <string>

namespace biflow {

enum class ErrorCode {
  // numerical
  NotPositiveDefinite,
  NotSymmetric,
  SingularDiagonal,
  SingularMatrix,
  BracketNotFound,
  DivergedLoss,
  // data
  DimensionMismatch,
  InsufficientSamples,
  BadMagic,
  TruncatedFile,
  BadModel,
  Io,
  // caller
  InvalidArgument,
};

enum class ErrorCategory { Usage, Data, Numerical };

const char* to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

/// Library-wide exception. The code identifies the failure; the category
/// drives CLI exit codes (2 usage, 3 data, 4 numerical).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, ErrorCode code, const char* what) {
  if (!condition) fail(code, what);
}

}  // namespace biflow
