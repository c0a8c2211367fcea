#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace embgp {

enum class ErrorCode {
  UnsupportedMeasure,
  InsufficientQuadrature,
  RankDeficientKernel,
  NumericalBreakdown,
  DimensionError,
  ModelOverflow,
  DomainError,
  NonConvergence,
  DegenerateConstraints,
  EvaluationFailure,
  EmptyLis,
  BadInit,
  StuckChain,
  DegenerateChain,
  ConfigError,
  ComparisonError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// CLI can emit a machine-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace embgp
