#include "wkoopman/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wkoopman/eigsolve.hpp"
#include "wkoopman/error.hpp"

namespace wkoopman {

namespace {

Vector damping_factors(const PointSet& x, const std::optional<EtaSpec>& eta) {
  Vector d = Vector::Ones(x.rows());
  if (!eta) return d;
  for (Eigen::Index i = 0; i < x.rows(); ++i) d(i) = std::exp(-(*eta)(x.row(i).transpose()));
  return d;
}

// Column vector [k_w(x_i, x)]_i.
Vector kernel_column(const KoopmanModel& model, const Eigen::Ref<const Vector>& x) {
  if (x.size() != model.dimension())
    fail(ErrorKind::InvalidInput, "state dimension does not match the model");
  return gram(model.kernel(), model.anchors_x(), x.transpose());
}

Matrix pinv_sqrt_psd(const Matrix& s) {
  const SymmetricEigen e = symmetric_eig(s);
  const double cut = 1e-12 * std::max(e.values(0), 0.0);
  Vector inv_root(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    inv_root(i) = e.values(i) > cut ? 1.0 / std::sqrt(e.values(i)) : 0.0;
  return e.vectors * inv_root.asDiagonal() * e.vectors.transpose();
}

// |Phi_x C Psi^*| = sqrt(lambda_max(L^{1/2} C^T K C L^{1/2})).
double norm_of_coefficients(const KoopmanModel& model, const Matrix& coeffs, const Matrix& l_root) {
  Matrix s = l_root * (coeffs.transpose() * model.gram_x() * coeffs) * l_root;
  s = 0.5 * (s + s.transpose());
  return std::sqrt(std::max(lambda_max(s), 0.0));
}

}  // namespace

void RRRConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) fail(ErrorKind::InvalidInput, "rrr.beta must be positive");
  if (rank < 1) fail(ErrorKind::InvalidInput, "rrr.rank must be >= 1");
  if (!(realness_tol > 0.0)) fail(ErrorKind::InvalidInput, "rrr.realness_tol must be positive");
}

KoopmanModel::KoopmanModel(PointSet anchors_x, PointSet anchors_y, Matrix theta, WeightedKernelSpec kw,
                           std::optional<EtaSpec> eta, double beta, int rank,
                           Normalization normalization)
    : x_(std::move(anchors_x)),
      y_(std::move(anchors_y)),
      theta_(std::move(theta)),
      kw_(kw),
      eta_(eta),
      beta_(beta),
      rank_(rank),
      normalization_(normalization) {
  const Eigen::Index m = x_.rows();
  if (m < 1 || y_.rows() != m || x_.cols() != y_.cols())
    fail(ErrorKind::InvalidInput, "model anchors must be two non-empty lists of equal shape");
  if (theta_.rows() != m || theta_.cols() != m)
    fail(ErrorKind::InvalidInput, "Theta must be m x m");
  kw_.validate();
  d_ = damping_factors(x_, eta_);
  k_ = gram(kw_, x_, x_);
  const Matrix l_raw = gram(kw_, y_, y_);
  l_ = d_.asDiagonal() * l_raw * d_.asDiagonal();
  kx_psi_ = gram(kw_, x_, y_) * d_.asDiagonal();
}

void KoopmanModel::refresh_diagnostics() {
  diag_.empirical_risk = empirical_risk(*this);
  diag_.hs_norm = hs_norm(*this);
  diag_.op_norm = op_norm(*this);
  diag_.op_norm_k_congruence = op_norm_k_congruence(*this);
  diag_.norm_bound = paper_norm_bound(*this);
}

double resolve_beta(const Matrix& gram_x, const RRRConfig& cfg) {
  if (cfg.beta_mode == BetaMode::Absolute) return cfg.beta;
  const double m = static_cast<double>(gram_x.rows());
  const double top = lambda_max(gram_x / m);
  if (!(top > 0.0))
    fail(ErrorKind::DegenerateData, "K_w is identically zero; check the weight floor");
  return cfg.beta * top;
}

Matrix normalize_eigenvectors(const Matrix& u, const Matrix& gram_x, double beta, Normalization conv) {
  const Eigen::Index m = gram_x.rows();
  const double md = static_cast<double>(m);
  Matrix rhs = conv == Normalization::Consistent ? Matrix(gram_x / md) : gram_x;
  rhs.diagonal().array() += beta;
  const Matrix form = gram_x * rhs;
  Matrix out = u;
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    const double c = u.col(i).dot(form * u.col(i));
    if (!(c > 0.0) || !std::isfinite(c))
      fail(ErrorKind::SpectralAnomaly, "eigenvector " + std::to_string(i) +
                                           " has a non-positive normalization form; lower the rank");
    out.col(i) /= std::sqrt(c);
  }
  return out;
}

Matrix theta_from_vectors(const Matrix& u, const Matrix& gram_x) {
  const double m = static_cast<double>(gram_x.rows());
  return (u * (u.transpose() * gram_x)) / m;
}

KoopmanModel fit_operator(const SnapshotDataset& ds, const WeightedKernelSpec& kw,
                          const std::optional<EtaSpec>& eta, const RRRConfig& cfg) {
  cfg.validate();
  kw.validate();
  const Eigen::Index m = ds.size();
  if (m < 1 || ds.y.rows() != m) fail(ErrorKind::InvalidInput, "dataset must hold m >= 1 pairs");
  if (cfg.rank > m)
    fail(ErrorKind::InvalidInput,
         "rank " + std::to_string(cfg.rank) + " exceeds the sample size " + std::to_string(m));

  KoopmanModel model(ds.x, ds.y, Matrix::Zero(m, m), kw, eta, 0.0, cfg.rank, cfg.normalization);
  const Matrix& k = model.gram_x();
  const Matrix& l = model.gram_target();
  if (k.cwiseAbs().maxCoeff() == 0.0)
    fail(ErrorKind::DegenerateData, "K_w is identically zero; check the weight floor");

  const double beta = resolve_beta(k, cfg);
  const double md = static_cast<double>(m);
  Pencil pencil;
  pencil.m = (l * k) / (md * md);
  pencil.b = k / md;
  pencil.b.diagonal().array() += beta;
  PencilOptions opts;
  opts.realness_tol = cfg.realness_tol;
  const PencilSolution sol = generalized_eig_topr(pencil, cfg.rank, opts);

  model.beta_ = beta;
  model.u_ = normalize_eigenvectors(sol.vectors, k, beta, cfg.normalization);
  model.theta_ = theta_from_vectors(model.u_, k);
  model.diag_.sigma2 = sol.values;
  model.diag_.max_imag = sol.max_imag;
  model.diag_.tie_at_rank = sol.tie_at_rank;
  model.refresh_diagnostics();
  return model;
}

KoopmanModel fit_koopman(const SnapshotDataset& ds, const WeightedKernelSpec& kw, const RRRConfig& cfg) {
  return fit_operator(ds, kw, std::nullopt, cfg);
}

KoopmanModel fit_zubov_koopman(const SnapshotDataset& ds, const WeightedKernelSpec& kw,
                               const EtaSpec& eta, const RRRConfig& cfg) {
  eta.validate();
  if (!ds.eta_x) fail(ErrorKind::InvalidInput, "Zubov fit requires eta values in the dataset");
  if (ds.eta_x->size() != ds.size()) fail(ErrorKind::InvalidInput, "eta column length mismatch");
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const double expected = eta(ds.x.row(i).transpose());
    if (std::abs((*ds.eta_x)(i) - expected) > 1e-12 * std::max(1.0, std::abs(expected)))
      fail(ErrorKind::InvalidInput, "dataset eta values do not match the configured eta at row " +
                                        std::to_string(i));
  }
  return fit_operator(ds, kw, eta, cfg);
}

Vector adjoint_coeffs(const KoopmanModel& model, const Eigen::Ref<const Vector>& x, int t) {
  if (t < 1) fail(ErrorKind::InvalidInput, "adjoint_coeffs: t must be >= 1");
  Vector b = model.theta().transpose() * kernel_column(model, x);
  if (t == 1) return b;
  const Matrix step = model.theta().transpose() * model.cross();
  for (int s = 1; s < t; ++s) b = step * b;
  return b;
}

Vector forward_coeffs(const KoopmanModel& model, const Eigen::Ref<const Vector>& g0, int t) {
  if (t < 1) fail(ErrorKind::InvalidInput, "forward_coeffs: t must be >= 1");
  if (g0.size() != model.size()) fail(ErrorKind::InvalidInput, "forward_coeffs: g0 has the wrong length");
  Vector a = model.theta() * (model.target_damping().cwiseProduct(g0));
  if (t == 1) return a;
  const Matrix step = model.theta() * model.cross().transpose();
  for (int s = 1; s < t; ++s) a = step * a;
  return a;
}

double predict_observable(const KoopmanModel& model, const Observable& g,
                          const Eigen::Ref<const Vector>& x, int t) {
  const WeightSpec& w = model.kernel().weight;
  if (t < 0) fail(ErrorKind::InvalidInput, "predict_observable: t must be >= 0");
  if (t == 0) return eval_weight(w, x) * g(x);
  Vector g0(model.size());
  for (Eigen::Index j = 0; j < model.size(); ++j) {
    const Vector yj = model.anchors_y().row(j).transpose();
    g0(j) = eval_weight(w, yj) * g(yj);
  }
  return forward_coeffs(model, g0, t).dot(kernel_column(model, x));
}

Objective regularized_objective(const KoopmanModel& model, const Matrix& theta) {
  const Matrix& k = model.gram_x();
  const Matrix& l = model.gram_target();
  const double m = static_cast<double>(model.size());
  Matrix residual = theta.transpose() * k;
  residual.diagonal().array() -= 1.0;
  Objective out;
  out.risk = std::max((residual.transpose() * l * residual).trace() / m, 0.0);
  out.hs_squared = std::max((theta.transpose() * k * theta * l).trace(), 0.0);
  out.total = out.risk + model.beta() * out.hs_squared;
  return out;
}

double empirical_risk(const KoopmanModel& model) { return regularized_objective(model, model.theta()).risk; }

double heldout_risk(const KoopmanModel& model, const SnapshotDataset& heldout) {
  if (heldout.size() < 1 || heldout.dimension() != model.dimension())
    fail(ErrorKind::InvalidInput, "held-out dataset is empty or has the wrong dimension");
  const WeightedKernelSpec& kw = model.kernel();
  const Matrix c = model.theta().transpose() * gram(kw, model.anchors_x(), heldout.x);
  const Matrix cross_y = model.target_damping().asDiagonal() * gram(kw, model.anchors_y(), heldout.y);
  const Vector wy = eval_weights(kw.weight, heldout.y);
  const Vector dh = damping_factors(heldout.x, model.eta());
  const Matrix lc = model.gram_target() * c;
  double total = 0.0;
  for (Eigen::Index i = 0; i < heldout.size(); ++i) {
    const double quad = c.col(i).dot(lc.col(i));
    const double mixed = c.col(i).dot(cross_y.col(i));
    const double target = dh(i) * dh(i) * wy(i) * wy(i);
    total += std::max(quad - 2.0 * dh(i) * mixed + target, 0.0);
  }
  return total / static_cast<double>(heldout.size());
}

double hs_norm(const KoopmanModel& model) {
  return std::sqrt(regularized_objective(model, model.theta()).hs_squared);
}

double op_norm(const KoopmanModel& model) { return op_norm_power(model, 1); }

double op_norm_power(const KoopmanModel& model, int power) {
  if (power < 1) fail(ErrorKind::InvalidInput, "op_norm_power: power must be >= 1");
  const Matrix l_root = sqrt_psd(model.gram_target());
  Matrix coeffs = model.theta();
  if (power > 1) {
    const Matrix step = model.theta() * model.cross().transpose();
    for (int s = 1; s < power; ++s) coeffs = step * coeffs;
  }
  return norm_of_coefficients(model, coeffs, l_root);
}

std::vector<double> op_norm_powers(const KoopmanModel& model, int max_power) {
  if (max_power < 1) fail(ErrorKind::InvalidInput, "op_norm_powers: max_power must be >= 1");
  const Matrix l_root = sqrt_psd(model.gram_target());
  const Matrix step = model.theta() * model.cross().transpose();
  std::vector<double> norms;
  Matrix coeffs = model.theta();
  for (int s = 1; s <= max_power; ++s) {
    if (s > 1) coeffs = step * coeffs;
    norms.push_back(norm_of_coefficients(model, coeffs, l_root));
    if (norms.back() < 1.0) break;
  }
  return norms;
}

double op_norm_k_congruence(const KoopmanModel& model) {
  const Matrix k_inv_root = pinv_sqrt_psd(model.gram_x());
  const Matrix& l = model.gram_target();
  const Matrix& theta = model.theta();
  Matrix s = k_inv_root * l * theta.transpose() * model.gram_x() * theta * l * k_inv_root;
  s = 0.5 * (s + s.transpose());
  return std::max(lambda_max(s), 0.0);
}

double paper_norm_bound(const KoopmanModel& model, double beta) {
  if (!(beta > 0.0)) fail(ErrorKind::InvalidInput, "paper_norm_bound: beta must be positive");
  return lambda_max(model.gram_target()) / (beta * static_cast<double>(model.size()));
}

const char* to_string(Normalization n) noexcept {
  return n == Normalization::Consistent ? "consistent" : "paper-literal";
}

Normalization parse_normalization(const std::string& name) {
  if (name == "consistent") return Normalization::Consistent;
  if (name == "paper-literal") return Normalization::PaperLiteral;
  fail(ErrorKind::Config, "unknown rrr.normalization '" + name + "'");
}

}  // namespace wkoopman
