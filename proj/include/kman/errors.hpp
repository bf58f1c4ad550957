#pragma once

#include <stdexcept>
#include <string>

namespace kman {

enum class ErrorKind {
  ShapeMismatch,
  NonFinite,
  ConvergenceFailure,
  SingularSystem,
  RankDeficient,
  Unreachable,
  ZeroDenominator,
  SolverDiverged,
  InvalidConfig,
  UnknownKernel,
  SchemaError,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` says which contract was broken.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Process exit code for the CLI: 2 invalid config, 3 numerical failure, 4 I/O.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace kman
