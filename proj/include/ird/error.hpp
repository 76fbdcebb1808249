#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ird {

enum class ErrorKind {
  InputDomain,  // argument outside an operation's domain
  Validation,   // malformed user-supplied data
  Config,       // inconsistent configuration
  Planning,     // no trajectory satisfies the environment constraints
  NotFound,
  Conflict,
  Budget,       // requested work exceeds a configured size limit
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` drives CLI exit codes and
/// HTTP status mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InputDomain: return "input_domain_error";
    case ErrorKind::Validation: return "validation_error";
    case ErrorKind::Config: return "configuration_error";
    case ErrorKind::Planning: return "planning_error";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::Budget: return "budget_exceeded";
    case ErrorKind::Io: return "io_error";
  }
  return "error";
}

}  // namespace ird
