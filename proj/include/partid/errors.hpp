#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace partid {

enum class ErrorCode {
  validation,             // bad input value or malformed document
  infeasible_assumption,  // assumption contradicts the logical outcome range
  undefined_mar,          // no respondents to anchor an assumption on
  limit_exceeded,         // request would exceed a work bound
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return "validation_error";
    case ErrorCode::infeasible_assumption: return "infeasible_assumption";
    case ErrorCode::undefined_mar: return "undefined_mar";
    case ErrorCode::limit_exceeded: return "limit_exceeded";
  }
  return "unknown";
}

// Base of every error raised by the library. `detail` carries a location
// (field name, JSON path, CSV row) when one is known.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message, std::string detail = {})
      : Error(ErrorCode::validation, message, std::move(detail)) {}
};

class InfeasibleAssumption : public Error {
 public:
  explicit InfeasibleAssumption(const std::string& message, std::string detail = {})
      : Error(ErrorCode::infeasible_assumption, message, std::move(detail)) {}
};

class UndefinedMar : public Error {
 public:
  explicit UndefinedMar(const std::string& message, std::string detail = {})
      : Error(ErrorCode::undefined_mar, message, std::move(detail)) {}
};

class LimitExceeded : public Error {
 public:
  explicit LimitExceeded(const std::string& message, std::string detail = {})
      : Error(ErrorCode::limit_exceeded, message, std::move(detail)) {}
};

// Rethrows `e` as its concrete type with `prefix` prepended to the message.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& prefix,
                                              const std::string& detail) {
  const std::string msg = prefix + e.what();
  const std::string det = e.detail().empty() ? detail : detail + "/" + e.detail();
  switch (e.code()) {
    case ErrorCode::validation: throw ValidationError(msg, det);
    case ErrorCode::infeasible_assumption: throw InfeasibleAssumption(msg, det);
    case ErrorCode::undefined_mar: throw UndefinedMar(msg, det);
    case ErrorCode::limit_exceeded: throw LimitExceeded(msg, det);
  }
  throw Error(e.code(), msg, det);
}

}  // namespace partid
