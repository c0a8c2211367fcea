#include "embgp/errors.hpp"

namespace embgp {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnsupportedMeasure: return "UnsupportedMeasure";
    case ErrorCode::InsufficientQuadrature: return "InsufficientQuadrature";
    case ErrorCode::RankDeficientKernel: return "RankDeficientKernel";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::DimensionError: return "DimensionError";
    case ErrorCode::ModelOverflow: return "ModelOverflow";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DegenerateConstraints: return "DegenerateConstraints";
    case ErrorCode::EvaluationFailure: return "EvaluationFailure";
    case ErrorCode::EmptyLis: return "EmptyLis";
    case ErrorCode::BadInit: return "BadInit";
    case ErrorCode::StuckChain: return "StuckChain";
    case ErrorCode::DegenerateChain: return "DegenerateChain";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ComparisonError: return "ComparisonError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace embgp
