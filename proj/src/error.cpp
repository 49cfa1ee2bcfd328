#include "wkoopman/error.hpp"

namespace wkoopman {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Config: return "config";
    case ErrorKind::DegenerateDomain: return "degenerate-domain";
    case ErrorKind::DegenerateData: return "degenerate-data";
    case ErrorKind::NotPositiveDefinite: return "not-positive-definite";
    case ErrorKind::SolverFailure: return "solver-failure";
    case ErrorKind::SpectralAnomaly: return "spectral-anomaly";
    case ErrorKind::IntegrationBlowup: return "integration-blowup";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::ContractionViolated: return "contraction-violated";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::Config:
      return 1;
    case ErrorKind::DegenerateDomain:
    case ErrorKind::DegenerateData:
      return 2;
    default:
      return 3;
  }
}

}  // namespace wkoopman
