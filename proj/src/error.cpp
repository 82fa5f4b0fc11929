#include "hmmerg/error.hpp"

namespace hmmerg {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonStochastic: return "NonStochastic";
    case ErrorCode::NegativeDensity: return "NegativeDensity";
    case ErrorCode::UnknownObservation: return "UnknownObservation";
    case ErrorCode::StateSpaceMismatch: return "StateSpaceMismatch";
    case ErrorCode::SpaceMismatch: return "SpaceMismatch";
    case ErrorCode::MassMismatch: return "MassMismatch";
    case ErrorCode::NegativeTarget: return "NegativeTarget";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::BarycenterMismatch: return "BarycenterMismatch";
    case ErrorCode::DegenerateProduct: return "DegenerateProduct";
    case ErrorCode::NonpositiveEntry: return "NonpositiveEntry";
    case ErrorCode::KappaBelowOne: return "KappaBelowOne";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::DivisionByZeroMass: return "DivisionByZeroMass";
    case ErrorCode::CertificateInvalid: return "CertificateInvalid";
    case ErrorCode::BadPartition: return "BadPartition";
    case ErrorCode::NonStochasticEmission: return "NonStochasticEmission";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace hmmerg
