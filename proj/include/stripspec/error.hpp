#pragma once

#include <stdexcept>
#include <string>

namespace stripspec {

/// Failure category; the CLI maps each kind onto a process exit code.
enum class ErrorKind {
  Validation,  // bad configuration or precondition (exit 2)
  Numerical,   // solver or integrator failure (exit 3)
  Budget       // subdivision / step budget exhausted (exit 4)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

/// A point outside the (open or closed) strip, or mismatched domains/dimensions.
struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

/// Square-root continuation hit the branch cut (-inf, 0].
struct BranchError : NumericalError {
  explicit BranchError(const std::string& what) : NumericalError(what) {}
};

struct BudgetError : Error {
  explicit BudgetError(const std::string& what) : Error(ErrorKind::Budget, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return 2;
    case ErrorKind::Numerical: return 3;
    case ErrorKind::Budget: return 4;
  }
  return 1;
}

}  // namespace stripspec
