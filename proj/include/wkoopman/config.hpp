#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "wkoopman/dynsys.hpp"
#include "wkoopman/estimator.hpp"
#include "wkoopman/kernels.hpp"

namespace wkoopman {

struct SamplingConfig {
  int m = 500;
  std::uint64_t seed = 42;
  double dt = 0.05;
};

enum class CertificateMode { Lyapunov, Zubov };

struct CertificateConfig {
  CertificateMode mode = CertificateMode::Lyapunov;
  double tolerance = 1e-8;  // Lyapunov series tail
  int max_power = 32;       // largest power tried when certifying contraction
  double nu = 1.0;
  double varsigma = 0.1;
  double horizon = 0.15;  // physical time; steps = round(horizon / dt)
  double delta = 0.05;
};

/// One file fully determines a run.
///
///   [system]      kind, dimension, contraction
///   [domain]      kind, radius | lo, hi (comma separated)
///   [sampling]    m, seed, dt
///   [kernel]      kind, gamma
///   [weight]      kind, exponent, floor
///   [eta]         kind, scale                 (optional; required for zubov)
///   [rrr]         beta_mode, beta, rank, realness_tol, normalization
///   [certificate] mode, tolerance, max_power, nu, varsigma, horizon, delta
///   [grid]        resolution
///   [output]      dir
struct RunConfig {
  SystemSpec system;
  DomainSpec domain = DomainSpec::ball(2, 2.0);
  SamplingConfig sampling;
  WeightedKernelSpec kernel;
  std::optional<EtaSpec> eta;
  RRRConfig rrr;
  CertificateConfig certificate;
  int grid_resolution = 101;
  std::filesystem::path out_dir = "out";

  void validate() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string render_config(const RunConfig& cfg);

/// Settings of the two reference examples.
RunConfig example1_config();
RunConfig example2_config();

}  // namespace wkoopman
