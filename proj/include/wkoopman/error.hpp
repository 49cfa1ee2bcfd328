#pragma once

#include <stdexcept>
#include <string>

namespace wkoopman {

enum class ErrorKind {
  InvalidInput,
  Config,
  DegenerateDomain,
  DegenerateData,
  NotPositiveDefinite,
  SolverFailure,
  SpectralAnomaly,
  IntegrationBlowup,
  Divergence,
  ContractionViolated,
};

const char* to_string(ErrorKind kind) noexcept;

// Process exit code for a failure of this kind: 1 config/validation,
// 2 data degeneracy, 3 numerical failure.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace wkoopman
