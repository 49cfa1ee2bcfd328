#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wkoopman/kernels.hpp"
#include "wkoopman/types.hpp"

namespace wkoopman {

enum class SystemKind { Example1, Example2, LinearContraction };

/// Benchmark systems.
///
/// Example1:           x1' = -3 x1 + x2 + sin(2 pi x1) / (2 pi),  x2' = x1 - x2
/// Example2:           x1' = -x1,  x2' = (x1 x2 - 1) x2^3 + (x1 x2 - 1 + x1^2) x2
/// LinearContraction:  discrete map f(x) = a x (no integration)
struct SystemSpec {
  SystemKind kind = SystemKind::Example1;
  int dimension = 2;
  double contraction = 0.5;

  void validate() const;
  [[nodiscard]] bool is_ode() const noexcept { return kind != SystemKind::LinearContraction; }
};

enum class DomainKind { Ball, Box };

struct DomainSpec {
  DomainKind kind = DomainKind::Ball;
  int dimension = 2;
  double radius = 1.0;
  Vector lo;
  Vector hi;

  static DomainSpec ball(int dimension, double radius);
  static DomainSpec box(Vector lo, Vector hi);

  void validate() const;
  [[nodiscard]] bool contains(const Eigen::Ref<const Vector>& x) const;
  // Axis-aligned bounding box of the domain.
  [[nodiscard]] Vector lower() const;
  [[nodiscard]] Vector upper() const;
};

enum class EtaKind { QuadraticNorm };

/// State cost eta(x) = scale * |x|^2 used by the Zubov-Koopman operator.
struct EtaSpec {
  EtaKind kind = EtaKind::QuadraticNorm;
  double scale = 0.5;

  void validate() const;
  [[nodiscard]] double operator()(const Eigen::Ref<const Vector>& x) const;
};

struct SnapshotDataset {
  PointSet x;
  PointSet y;
  double dt = 0.0;
  std::optional<Vector> eta_x;
  std::uint64_t seed = 0;
  int rejected_count = 0;

  [[nodiscard]] Eigen::Index size() const noexcept { return x.rows(); }
  [[nodiscard]] Eigen::Index dimension() const noexcept { return x.cols(); }
};

// Divergence guards shared by every trajectory routine.
inline constexpr int kMaxTrajectorySteps = 100000;
inline constexpr double kBlowupNorm = 1e6;

Vector vector_field(const SystemSpec& sys, const Eigen::Ref<const Vector>& x);

/// One application of the discrete map: a classical RK4 step for the ODE
/// systems, the exact map a*x for the linear family (dt ignored).
Vector step(const SystemSpec& sys, const Eigen::Ref<const Vector>& x, double dt);

/// States x[0..steps] (one per row), x[0] = x0.
PointSet trajectory(const SystemSpec& sys, const Eigen::Ref<const Vector>& x0, double dt, int steps);

/// Deterministic uniform samples (one per row). Boxes use independent
/// coordinates, balls use rejection from the bounding box.
PointSet sample_uniform(const DomainSpec& dom, int m, std::uint64_t seed);

/// Uniform samples conditioned on `keep`. Throws DegenerateDomain when the
/// accepted region is too small to fill `m` rows.
PointSet sample_uniform(const DomainSpec& dom, int m, std::uint64_t seed,
                        const std::function<bool(const Vector&)>& keep);

SnapshotDataset make_dataset(const SystemSpec& sys, const DomainSpec& dom, int m, double dt,
                             std::uint64_t seed, const WeightSpec& w,
                             const std::optional<EtaSpec>& eta = std::nullopt);

/// max_i w(y_i) / w(x_i).
double check_decay_ratio(const SnapshotDataset& ds, const WeightSpec& w);

/// max_i exp(-eta(x_i)) w(y_i) / w(x_i); requires eta_x.
double check_damped_decay_ratio(const SnapshotDataset& ds, const WeightSpec& w);

/// Sum over the trajectory of k_w(x[t], x[t]) = w(x[t])^2 (identity Q).
double oracle_lyapunov(const SystemSpec& sys, const WeightedKernelSpec& kw,
                       const Eigen::Ref<const Vector>& x, double dt, double tail_tol);

/// g(z) = w(z)^nu / (w(z)^nu + varsigma^nu).
double zubov_observable(const WeightSpec& w, const Eigen::Ref<const Vector>& z, double nu,
                        double varsigma);

/// exp(-sum_{s<t} eta(x[s])) * g(x[t]). A trajectory that leaves every
/// bounded set accrues unbounded cost and evaluates to exactly 0.
double oracle_zubov(const SystemSpec& sys, const WeightSpec& w, const EtaSpec& eta,
                    const Eigen::Ref<const Vector>& x, double dt, int steps, double nu,
                    double varsigma);

/// Total cost sum_{t>=0} eta(x[t]) along the trajectory, summed until the
/// geometric tail estimate drops below `tail_tol`. Returns +inf when the
/// trajectory diverges or does not settle within the step cap.
double accumulated_cost(const SystemSpec& sys, const EtaSpec& eta, const Eigen::Ref<const Vector>& x,
                        double dt, double tail_tol);

const char* to_string(SystemKind kind) noexcept;
const char* to_string(DomainKind kind) noexcept;
SystemKind parse_system_kind(const std::string& name);
DomainKind parse_domain_kind(const std::string& name);

}  // namespace wkoopman
