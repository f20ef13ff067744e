#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rlvr {

enum class ErrorKind {
  InvalidInput,
  ContractViolation,
  NumericalFailure,
  InsufficientPool,
  EndpointFailure,
  NonRetryable,
  Protocol,
  Parse,
  MissingCheckpoint,
  UnknownBaseline,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Process exit code used by the command-line tool for each error kind.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InsufficientPoolError : public Error {
 public:
  InsufficientPoolError(const std::string& label, std::size_t requested,
                        std::size_t available);

  const std::string& label() const noexcept { return label_; }
  std::size_t requested() const noexcept { return requested_; }
  std::size_t available() const noexcept { return available_; }
  std::size_t shortfall() const noexcept { return requested_ - available_; }

 private:
  std::string label_;
  std::size_t requested_;
  std::size_t available_;
};

class EndpointError : public Error {
 public:
  EndpointError(ErrorKind kind, int last_status, int attempts,
                const std::string& message)
      : Error(kind, message), last_status_(last_status), attempts_(attempts) {}

  // 0 when the last attempt failed at the transport level.
  int last_status() const noexcept { return last_status_; }
  int attempts() const noexcept { return attempts_; }

 private:
  int last_status_;
  int attempts_;
};

class NumericalFailureError : public Error {
 public:
  NumericalFailureError(const std::string& group_id, const std::string& message)
      : Error(ErrorKind::NumericalFailure, message), group_id_(group_id) {}

  const std::string& group_id() const noexcept { return group_id_; }

 private:
  std::string group_id_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace rlvr
