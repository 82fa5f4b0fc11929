#pragma once

#include <stdexcept>
#include <string>

namespace hmmerg {

enum class ErrorCode {
  InvalidArgument = 1,
  NonStochastic,
  NegativeDensity,
  UnknownObservation,
  StateSpaceMismatch,
  SpaceMismatch,
  MassMismatch,
  NegativeTarget,
  SolverFailure,
  BudgetExceeded,
  BarycenterMismatch,
  DegenerateProduct,
  NonpositiveEntry,
  KappaBelowOne,
  HypothesisViolated,
  DivisionByZeroMass,
  CertificateInvalid,
  BadPartition,
  NonStochasticEmission,
  ParseError,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace hmmerg
