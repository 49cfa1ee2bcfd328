#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "wkoopman/dynsys.hpp"
#include "wkoopman/estimator.hpp"

namespace wkoopman {

inline constexpr int kMaxHorizon = 100000;

/// Evidence that powers of the fitted operator decay geometrically:
/// |A^power| = rate < 1 and |A^j| <= transient for 0 <= j < power.
/// power == 1 is the plain contraction |A| < 1.
struct ContractionCertificate {
  int power = 1;
  double rate = 0.0;
  double transient = 1.0;
  std::vector<double> power_norms;  // |A^1|, ..., |A^power|

  /// Upper bound on sum_{t > horizon} |A^t|^2 * c.
  [[nodiscard]] double tail(int horizon, double c) const;
};

/// Finds the smallest power s <= max_power with |A^s| < 1. Throws
/// ContractionViolated when there is none.
ContractionCertificate certify_contraction(const KoopmanModel& model, int max_power = 32);

/// Smallest T with alpha^{2(T+1)} c_max / (1 - alpha^2) <= tol, capped at
/// kMaxHorizon.
int truncation_horizon(double alpha, double c_max, double tol);

/// Smallest T whose certified tail is <= tol, capped at kMaxHorizon.
int truncation_horizon(const ContractionCertificate& cert, double c_max, double tol);

/// v(x) = k_w(x, x) + sum_{t=1}^{T} |(A*)^t k_w(x, .)|^2 (identity Q).
///
/// The truncated series is folded into one coefficient matrix
/// P = Theta (sum_{t<T} (S^t)^T L S^t) Theta^T with S = Theta^T K_{x,psi},
/// so each evaluation costs one quadratic form. The estimate keeps a
/// reference to `model`, which must outlive it.
class LyapunovEstimate {
 public:
  /// Picks T from the contraction certificate so the tail is <= tol.
  LyapunovEstimate(const KoopmanModel& model, double tol, int max_power = 32);
  /// Fixed horizon; the certificate is still required.
  LyapunovEstimate(const KoopmanModel& model, int horizon, int max_power = 32);

  [[nodiscard]] double value(const Eigen::Ref<const Vector>& x) const;
  [[nodiscard]] Vector values(const PointSet& points) const;

  [[nodiscard]] int horizon() const noexcept { return horizon_; }
  [[nodiscard]] bool horizon_capped() const noexcept { return horizon_ >= kMaxHorizon; }
  /// max_i max(k_w(x_i, x_i), k_w(y_i, y_i))
  [[nodiscard]] double c_max() const noexcept { return c_max_; }
  [[nodiscard]] double tail_bound() const { return cert_.tail(horizon_, c_max_); }
  /// Tail bound valid at x, using max(c_max, k_w(x, x)).
  [[nodiscard]] double tail_bound_at(const Eigen::Ref<const Vector>& x) const;
  [[nodiscard]] const ContractionCertificate& certificate() const noexcept { return cert_; }
  [[nodiscard]] const KoopmanModel& model() const noexcept { return *model_; }

 private:
  void build();

  const KoopmanModel* model_;
  ContractionCertificate cert_;
  int horizon_ = 0;
  double c_max_ = 0.0;
  Matrix coeff_;
};

double lyapunov_value(const LyapunovEstimate& est, const Eigen::Ref<const Vector>& x);

/// Same series summed term by term with adjoint_coeffs.
double lyapunov_value_by_recursion(const KoopmanModel& model, const Eigen::Ref<const Vector>& x,
                                   int horizon);

/// zeta_t(x) = Z^t (w g)(x) with w g = w^nu / (w^nu + varsigma^nu).
/// Keeps a reference to `model` (Zubov mode), which must outlive it.
class ZubovEstimate {
 public:
  ZubovEstimate(const KoopmanModel& model, int steps, double nu, double varsigma);

  [[nodiscard]] double value(const Eigen::Ref<const Vector>& x) const;
  [[nodiscard]] Vector values(const PointSet& points) const;

  [[nodiscard]] int steps() const noexcept { return steps_; }
  [[nodiscard]] double nu() const noexcept { return nu_; }
  [[nodiscard]] double varsigma() const noexcept { return varsigma_; }
  [[nodiscard]] const Vector& g0() const noexcept { return g0_; }

 private:
  const KoopmanModel* model_;
  int steps_;
  double nu_;
  double varsigma_;
  Vector g0_;
  Vector coeffs_;
};

double zubov_value(const ZubovEstimate& est, const Eigen::Ref<const Vector>& x);

/// Number of map applications for a physical horizon: round(time / dt).
int horizon_steps(double time, double dt);

/// C_w-norm bound of the Zubov observable.
double c_nu(double nu, double varsigma);

struct GeneralizationTerms {
  double eps_x = 0.0;  // also bounds the cross-covariance deviation
  double eps_y = 0.0;
  double rho_check = 0.0;
};

GeneralizationTerms generalization_terms(double m, double gamma, double r, double delta);
double generalization_bound(double m, double gamma, double r, double delta);

/// 2 alpha |Q| / (1 - alpha^2)^2 * sqrt(rho); +inf when alpha >= 1.
double lyapunov_error_bound(double alpha, double qnorm, double rho);

/// t alpha^{t-1} sqrt(rho) c_nu / varsigma; +inf when alpha >= 1.
double zubov_error_bound(int t, double alpha, double rho, double nu, double varsigma);

/// mu_a tabulated on increasing levels; values are made nondecreasing.
struct MuTable {
  std::vector<double> levels;
  std::vector<double> mu;

  /// Piecewise-linear interpolation; below the first level returns mu[0],
  /// beyond the last level returns +inf.
  [[nodiscard]] double operator()(double a) const;
};

/// Sample maximum of the accumulated cost sum_t eta(f^t(x)) over `samples`
/// points of {w <= a} intersected with the domain, for each level a.
MuTable estimate_mu_table(const SystemSpec& sys, const EtaSpec& eta, const WeightSpec& w,
                          const DomainSpec& dom, const std::vector<double>& levels, int samples,
                          double dt, std::uint64_t seed, double tail_tol = 1e-6);

/// Sign change of
///   log(alpha_lower a / varsigma) - (mu(a) + log 2) / eta_lower * log(1 / alpha_lower)
/// inside [lo, hi]. Returns hi when both endpoints are feasible, the
/// feasible side of the bisected transition when exactly one is, and
/// nullopt when neither is.
std::optional<double> doa_level_threshold(double eta_lower, const std::function<double(double)>& mu,
                                          double alpha_lower, double varsigma, double lo, double hi);

struct GridTable {
  PointSet points;
  Vector values;
};

/// Regular grid over the domain's bounding box, `resolution` nodes per
/// axis, first coordinate varying slowest.
PointSet grid_points(const DomainSpec& dom, int resolution);

GridTable grid_eval(const std::function<double(const Vector&)>& fn, const DomainSpec& dom,
                    int resolution);

/// Closed-form quantities with their inputs.
struct BoundReport {
  int m = 0;
  int r = 0;
  double delta = 0.0;
  double gamma = 0.0;  // HS-norm cap, set to the fitted HS norm
  double beta = 0.0;
  GeneralizationTerms generalization;
  double empirical_risk = 0.0;
  double heldout_risk = 0.0;
  int heldout_size = 0;
  double op_norm = 0.0;
  double op_norm_k_congruence = 0.0;
  double norm_bound = 0.0;  // lambda_max(L) / (beta m)
  double lambda_max_l = 0.0;
  double alpha_hat = 0.0;  // empirical decay ratio of the training data
  double alpha_bar = 0.0;  // plug-in max(op_norm, alpha_hat)
  double qnorm = 1.0;
  double lyapunov_constant = 0.0;  // 2 alpha / (1 - alpha^2)^2
  double lyapunov_bound = 0.0;     // constant * |Q| * sqrt(heldout risk)
  // Zubov-only fields.
  bool zubov = false;
  int zubov_steps = 0;
  double nu = 1.0;
  double varsigma = 0.1;
  double c_nu = 0.0;
  double zubov_bound = 0.0;
};

struct ZubovReportOptions {
  int steps = 1;
  double nu = 1.0;
  double varsigma = 0.1;
};

BoundReport make_bound_report(const KoopmanModel& model, double delta, const SnapshotDataset& train,
                              const SnapshotDataset& heldout,
                              const std::optional<ZubovReportOptions>& zubov = std::nullopt);

}  // namespace wkoopman
