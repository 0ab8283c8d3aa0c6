#pragma once

#include <stdexcept>
#include <string>

namespace tierprobe {

// Errors carry a category so the CLI can map them onto exit codes:
// validation/usage problems exit 1, computational failures exit 2.
enum class ErrorKind { Validation, Usage, Computation };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class ComputationError : public Error {
 public:
  explicit ComputationError(const std::string& what) : Error(ErrorKind::Computation, what) {}
};

}  // namespace tierprobe

namespace tierprobe {

/// Same error category, message prefixed with `context`.
inline Error with_context(const Error& e, const std::string& context) {
  return Error(e.kind(), context + ": " + e.what());
}

}  // namespace tierprobe
