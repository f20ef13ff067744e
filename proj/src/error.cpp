#include "rlvr/error.hpp"

namespace rlvr {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::ContractViolation: return "contract_violation";
    case ErrorKind::NumericalFailure: return "numerical_failure";
    case ErrorKind::InsufficientPool: return "insufficient_pool";
    case ErrorKind::EndpointFailure: return "endpoint_failure";
    case ErrorKind::NonRetryable: return "non_retryable";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::MissingCheckpoint: return "missing_checkpoint";
    case ErrorKind::UnknownBaseline: return "unknown_baseline";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return 2;
    case ErrorKind::Parse: return 3;
    case ErrorKind::InsufficientPool: return 4;
    case ErrorKind::EndpointFailure:
    case ErrorKind::NonRetryable:
    case ErrorKind::Protocol: return 5;
    case ErrorKind::NumericalFailure: return 6;
    case ErrorKind::MissingCheckpoint: return 7;
    case ErrorKind::UnknownBaseline: return 8;
    case ErrorKind::ContractViolation: return 9;
    case ErrorKind::Io: return 10;
  }
  return 1;
}

InsufficientPoolError::InsufficientPoolError(const std::string& label,
                                             std::size_t requested,
                                             std::size_t available)
    : Error(ErrorKind::InsufficientPool,
            "insufficient " + label + " pool: requested " +
                std::to_string(requested) + ", available " +
                std::to_string(available) + ", shortfall " +
                std::to_string(requested - available)),
      label_(label),
      requested_(requested),
      available_(available) {}

}  // namespace rlvr
