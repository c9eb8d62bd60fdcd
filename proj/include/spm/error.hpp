#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spm {

/// Failure categories raised by the library. Each maps to one error path of
/// a public operation; callers that need to branch on the cause switch on it.
enum class ErrorKind {
  InvalidArgument,
  EmptyRegion,
  InvalidWeight,
  DegenerateBall,
  ResolutionTooCoarse,
  FitFailure,
  SolverFailure,
  SizeLimit,
  UnstableTime,
  SymbolEvaluation,
  QuadratureUnderresolved,
  TruncationBelowResolution,
  DivergentNorm,
  Boundary,
  Convergence,
  InsufficientSpread,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace spm
