#pragma once

#include <stdexcept>
#include <string>

namespace gfd {

enum class ErrorCode {
  // parameter admissibility
  kPOutOfRange,
  kDimensionTooSmall,
  kLogWithoutPower,
  kBadAlpha,
  kNegativeBeta,
  // geometry
  kNonPositiveCoordinate,
  kNonPositiveScale,
  kCoincidentPoints,
  kDimensionMismatch,
  kDegenerateRegion,
  kPrecondition,
  // numerics
  kQuadratureFailure,
  kSolverFailure,
  kBudgetExceeded,
  // io
  kEmptySuite,
  kIo,
  kParse,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gfd
