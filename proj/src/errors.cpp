#include "kman/errors.hpp"

namespace kman {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::ZeroDenominator: return "ZeroDenominator";
    case ErrorKind::SolverDiverged: return "SolverDiverged";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::UnknownKernel: return "UnknownKernel";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Error";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::UnknownKernel:
    case ErrorKind::SchemaError:
    case ErrorKind::ShapeMismatch:
      return 2;
    case ErrorKind::IoError:
      return 4;
    default:
      return 3;
  }
}

}  // namespace kman
