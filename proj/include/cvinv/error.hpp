#pragma once

#include <stdexcept>
#include <string>

namespace cvinv {

enum class ErrorCode {
  InvalidArgument,
  NotHermitian,
  ShapeMismatch,
  GridTooCoarse,
  ModeCountMismatch,
  MixedQuadratureTerm,
  DimensionBudgetExceeded,
  UnsupportedTermDegree,
  DimMismatch,
  ZeroOutput,
  NonConvergedTruncation,
  DuplicateModes,
  ParamDomain,
  NotShiftPhaseClosed,
  TruncationDominated,
  ParseError,
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode c, const std::string& what)
      : std::runtime_error(std::string(error_name(c)) + ": " + what), code_(c) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cvinv
