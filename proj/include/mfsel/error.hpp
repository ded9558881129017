#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfsel {

enum class ErrorKind {
  kInvalidParameter,
  kInvalidInput,
  kIntegrationDiverged,
  kRiccatiEscape,
  kKinkQuery,
  kNoConvergence,
  kNoStationaryPoint,
  kInvalidReduction,
  kInvalidOracle,
  kCflViolation,
  kPdeDiverged,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-checkable kind. Everything the library
/// throws on purpose is an `Error`.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return "invalid-parameter";
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kIntegrationDiverged: return "integration-diverged";
    case ErrorKind::kRiccatiEscape: return "riccati-escape";
    case ErrorKind::kKinkQuery: return "kink-query";
    case ErrorKind::kNoConvergence: return "no-convergence";
    case ErrorKind::kNoStationaryPoint: return "no-stationary-point";
    case ErrorKind::kInvalidReduction: return "invalid-reduction";
    case ErrorKind::kInvalidOracle: return "invalid-oracle";
    case ErrorKind::kCflViolation: return "cfl-violation";
    case ErrorKind::kPdeDiverged: return "pde-diverged";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace mfsel
