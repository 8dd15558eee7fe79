#include "cvinv/error.hpp"

namespace cvinv {

const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::ModeCountMismatch: return "ModeCountMismatch";
    case ErrorCode::MixedQuadratureTerm: return "MixedQuadratureTerm";
    case ErrorCode::DimensionBudgetExceeded: return "DimensionBudgetExceeded";
    case ErrorCode::UnsupportedTermDegree: return "UnsupportedTermDegree";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ZeroOutput: return "ZeroOutput";
    case ErrorCode::NonConvergedTruncation: return "NonConvergedTruncation";
    case ErrorCode::DuplicateModes: return "DuplicateModes";
    case ErrorCode::ParamDomain: return "ParamDomain";
    case ErrorCode::NotShiftPhaseClosed: return "NotShiftPhaseClosed";
    case ErrorCode::TruncationDominated: return "TruncationDominated";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace cvinv
