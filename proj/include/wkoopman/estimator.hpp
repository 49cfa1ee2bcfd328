#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wkoopman/dynsys.hpp"
#include "wkoopman/kernels.hpp"
#include "wkoopman/types.hpp"

namespace wkoopman {

enum class BetaMode { Absolute, Relative };

/// How each retained generalized eigenvector u_i is scaled before forming
/// Theta = (1/m) U U^T K.
///
/// Consistent:   u^T K ((1/m) K + beta I) u = 1. With r = m this reproduces
///               the unconstrained ridge solution Theta = (K + m beta I)^{-1}.
/// PaperLiteral: u^T K (K + beta I) u = 1.
enum class Normalization { Consistent, PaperLiteral };

struct RRRConfig {
  BetaMode beta_mode = BetaMode::Relative;
  // Absolute value, or fraction of lambda_max((1/m) K_w) in relative mode.
  double beta = 0.01;
  int rank = 1;
  double realness_tol = 1e-6;
  Normalization normalization = Normalization::Consistent;

  void validate() const;
};

enum class ModelMode { Koopman, Zubov };

struct FitDiagnostics {
  Vector sigma2;
  double empirical_risk = 0.0;
  double hs_norm = 0.0;
  double op_norm = 0.0;
  // lambda_max(K^{-1/2} L Theta^T K Theta L K^{-1/2}), pseudo-inverse root.
  double op_norm_k_congruence = 0.0;
  double norm_bound = 0.0;
  double max_imag = 0.0;
  bool tie_at_rank = false;
};

/// Finite-rank operator A = sum_ij theta_ij k_w(x_i, .) (x) psi_j where the
/// target basis is psi_j = d_j k_w(y_j, .), with d_j = exp(-eta(x_j)) in
/// Zubov mode and d_j = 1 otherwise.
class KoopmanModel {
 public:
  /// Rebuilds every cached Gram block from the anchors and specs.
  KoopmanModel(PointSet anchors_x, PointSet anchors_y, Matrix theta, WeightedKernelSpec kw,
               std::optional<EtaSpec> eta, double beta, int rank, Normalization normalization);

  [[nodiscard]] const PointSet& anchors_x() const noexcept { return x_; }
  [[nodiscard]] const PointSet& anchors_y() const noexcept { return y_; }
  [[nodiscard]] const Matrix& theta() const noexcept { return theta_; }
  [[nodiscard]] const WeightedKernelSpec& kernel() const noexcept { return kw_; }
  [[nodiscard]] ModelMode mode() const noexcept { return eta_ ? ModelMode::Zubov : ModelMode::Koopman; }
  [[nodiscard]] const std::optional<EtaSpec>& eta() const noexcept { return eta_; }
  [[nodiscard]] double beta() const noexcept { return beta_; }
  [[nodiscard]] int rank() const noexcept { return rank_; }
  [[nodiscard]] Normalization normalization() const noexcept { return normalization_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return x_.rows(); }
  [[nodiscard]] Eigen::Index dimension() const noexcept { return x_.cols(); }

  /// K_w = [k_w(x_i, x_j)]
  [[nodiscard]] const Matrix& gram_x() const noexcept { return k_; }
  /// L = [<psi_i, psi_j>] = [d_i d_j k_w(y_i, y_j)]
  [[nodiscard]] const Matrix& gram_target() const noexcept { return l_; }
  /// [<k_w(x_i, .), psi_j>] = [k_w(x_i, y_j) d_j]
  [[nodiscard]] const Matrix& cross() const noexcept { return kx_psi_; }
  [[nodiscard]] const Vector& target_damping() const noexcept { return d_; }

  /// Normalized generalized eigenvectors U_r; empty for a loaded model.
  [[nodiscard]] const Matrix& eigenvectors() const noexcept { return u_; }
  [[nodiscard]] const FitDiagnostics& diagnostics() const noexcept { return diag_; }

 private:
  friend KoopmanModel fit_operator(const SnapshotDataset&, const WeightedKernelSpec&,
                                   const std::optional<EtaSpec>&, const RRRConfig&);
  friend KoopmanModel load_model(const std::string&);

  void refresh_diagnostics();

  PointSet x_;
  PointSet y_;
  Matrix theta_;
  WeightedKernelSpec kw_;
  std::optional<EtaSpec> eta_;
  double beta_;
  int rank_;
  Normalization normalization_;

  Matrix k_;
  Matrix l_;
  Matrix kx_psi_;
  Vector d_;
  Matrix u_;
  FitDiagnostics diag_;
};

/// beta resolved to an absolute value for the Gram K_w of m anchors.
double resolve_beta(const Matrix& gram_x, const RRRConfig& cfg);

/// Scales each column of `u` per the normalization convention.
Matrix normalize_eigenvectors(const Matrix& u, const Matrix& gram_x, double beta, Normalization conv);

/// (1/m) U U^T K
Matrix theta_from_vectors(const Matrix& u, const Matrix& gram_x);

KoopmanModel fit_operator(const SnapshotDataset& ds, const WeightedKernelSpec& kw,
                          const std::optional<EtaSpec>& eta, const RRRConfig& cfg);

KoopmanModel fit_koopman(const SnapshotDataset& ds, const WeightedKernelSpec& kw, const RRRConfig& cfg);

/// Requires ds.eta_x to match `eta` at the inputs to 1e-12.
KoopmanModel fit_zubov_koopman(const SnapshotDataset& ds, const WeightedKernelSpec& kw,
                               const EtaSpec& eta, const RRRConfig& cfg);

/// Coefficients b with (A*)^t k_w(x, .) = sum_j b_j psi_j, t >= 1.
Vector adjoint_coeffs(const KoopmanModel& model, const Eigen::Ref<const Vector>& x, int t);

/// Coefficients a with A^t h = sum_i a_i k_w(x_i, .), where g0 holds the
/// values h(y_j) at the target anchors, t >= 1.
Vector forward_coeffs(const KoopmanModel& model, const Eigen::Ref<const Vector>& g0, int t);

using Observable = std::function<double(const Vector&)>;

/// A^t (w g) evaluated at x; t = 0 returns w(x) g(x).
double predict_observable(const KoopmanModel& model, const Observable& g,
                          const Eigen::Ref<const Vector>& x, int t);

struct Objective {
  double risk = 0.0;
  double hs_squared = 0.0;
  double total = 0.0;  // risk + beta * hs_squared
};

/// Empirical risk and HS regularizer of an arbitrary coefficient matrix on
/// the model's anchors.
Objective regularized_objective(const KoopmanModel& model, const Matrix& theta);

double empirical_risk(const KoopmanModel& model);

/// Mean of |A* k_w(x, .) - d(x) k_w(f(x), .)|^2 over a held-out dataset.
double heldout_risk(const KoopmanModel& model, const SnapshotDataset& heldout);

double hs_norm(const KoopmanModel& model);
double op_norm(const KoopmanModel& model);
/// |A^power| in the weighted RKHS.
double op_norm_power(const KoopmanModel& model, int power);
/// |A^1|, |A^2|, ... stopping at the first power below one or at
/// max_power.
std::vector<double> op_norm_powers(const KoopmanModel& model, int max_power);
double op_norm_k_congruence(const KoopmanModel& model);

/// lambda_max(L) / (beta m)
double paper_norm_bound(const KoopmanModel& model, double beta);
inline double paper_norm_bound(const KoopmanModel& model) { return paper_norm_bound(model, model.beta()); }

const char* to_string(Normalization n) noexcept;
Normalization parse_normalization(const std::string& name);

}  // namespace wkoopman
