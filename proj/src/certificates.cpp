#include "wkoopman/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "wkoopman/eigsolve.hpp"
#include "wkoopman/error.hpp"

namespace wkoopman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector kernel_column(const KoopmanModel& model, const Eigen::Ref<const Vector>& x) {
  if (x.size() != model.dimension())
    fail(ErrorKind::InvalidInput, "state dimension does not match the model");
  return gram(model.kernel(), model.anchors_x(), x.transpose());
}

}  // namespace

double ContractionCertificate::tail(int horizon, double c) const {
  if (c <= 0.0) return 0.0;
  const double blocks = std::floor(static_cast<double>(horizon + 1) / power);
  return c * transient * transient * power * std::pow(rate, 2.0 * blocks) / (1.0 - rate * rate);
}

ContractionCertificate certify_contraction(const KoopmanModel& model, int max_power) {
  const std::vector<double> norms = op_norm_powers(model, max_power);
  if (norms.back() >= 1.0)
    fail(ErrorKind::ContractionViolated,
         "fitted operator is not contractive (|A| = " + std::to_string(norms.front()) +
             ", no power up to " + std::to_string(max_power) +
             " has norm below 1); raise beta or lower the rank");
  ContractionCertificate cert;
  cert.power = static_cast<int>(norms.size());
  cert.rate = norms.back();
  cert.power_norms = norms;
  cert.transient = 1.0;
  for (std::size_t j = 0; j + 1 < norms.size(); ++j) cert.transient = std::max(cert.transient, norms[j]);
  return cert;
}

int truncation_horizon(const ContractionCertificate& cert, double c_max, double tol) {
  if (!(tol > 0.0)) fail(ErrorKind::InvalidInput, "truncation_horizon: tol must be positive");
  if (!(cert.rate >= 0.0 && cert.rate < 1.0))
    fail(ErrorKind::InvalidInput, "truncation_horizon: rate must lie in [0, 1)");
  if (c_max <= 0.0 || cert.tail(0, c_max) <= tol) return 0;
  if (cert.rate == 0.0) return std::max(cert.power - 1, 0);
  const double s = cert.power;
  const double need = std::log(tol * (1.0 - cert.rate * cert.rate) /
                               (c_max * cert.transient * cert.transient * s)) /
                      (2.0 * std::log(cert.rate));
  if (!(need * s < kMaxHorizon)) return kMaxHorizon;
  int t = std::max(static_cast<int>(std::ceil(need)) * cert.power - 1, 0);
  // Closed form first, then settle rounding against the tail itself.
  while (t < kMaxHorizon && cert.tail(t, c_max) > tol) ++t;
  while (t > 0 && cert.tail(t - 1, c_max) <= tol) --t;
  return t;
}

int truncation_horizon(double alpha, double c_max, double tol) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    fail(ErrorKind::InvalidInput, "truncation_horizon: alpha must lie in [0, 1)");
  ContractionCertificate cert;
  cert.rate = alpha;
  cert.power_norms = {alpha};
  return truncation_horizon(cert, c_max, tol);
}

LyapunovEstimate::LyapunovEstimate(const KoopmanModel& model, double tol, int max_power)
    : model_(&model), cert_(certify_contraction(model, max_power)) {
  const Vector wx = eval_weights(model.kernel().weight, model.anchors_x());
  const Vector wy = eval_weights(model.kernel().weight, model.anchors_y());
  c_max_ = std::max(wx.cwiseAbs2().maxCoeff(), wy.cwiseAbs2().maxCoeff());
  horizon_ = truncation_horizon(cert_, c_max_, tol);
  build();
}

LyapunovEstimate::LyapunovEstimate(const KoopmanModel& model, int horizon, int max_power)
    : model_(&model), cert_(certify_contraction(model, max_power)), horizon_(horizon) {
  if (horizon < 0) fail(ErrorKind::InvalidInput, "LyapunovEstimate: horizon must be >= 0");
  const Vector wx = eval_weights(model.kernel().weight, model.anchors_x());
  const Vector wy = eval_weights(model.kernel().weight, model.anchors_y());
  c_max_ = std::max(wx.cwiseAbs2().maxCoeff(), wy.cwiseAbs2().maxCoeff());
  build();
}

void LyapunovEstimate::build() {
  const Matrix& theta = model_->theta();
  const Matrix& l = model_->gram_target();
  const Matrix step = theta.transpose() * model_->cross();
  const Eigen::Index m = model_->size();

  // G_n = sum_{j<n} (S^j)^T L S^j by binary expansion of the horizon:
  // G_{2n} = G_n + (S^n)^T G_n S^n and G_{n+1} = L + S^T G_n S.
  Matrix g = Matrix::Zero(m, m);
  Matrix power = Matrix::Identity(m, m);
  int top = -1;
  for (int bit = 30; bit >= 0 && top < 0; --bit)
    if ((horizon_ >> bit) & 1) top = bit;
  for (int bit = top; bit >= 0; --bit) {
    g += power.transpose() * g * power;
    power = power * power;
    if ((horizon_ >> bit) & 1) {
      g = l + step.transpose() * g * step;
      power = power * step;
    }
    g = 0.5 * (g + g.transpose());
  }
  coeff_ = theta * g * theta.transpose();
  coeff_ = 0.5 * (coeff_ + coeff_.transpose());
}

double LyapunovEstimate::value(const Eigen::Ref<const Vector>& x) const {
  const Vector k = kernel_column(*model_, x);
  const double wx = eval_weight(model_->kernel().weight, x);
  return std::max(wx * wx + k.dot(coeff_ * k), 0.0);
}

Vector LyapunovEstimate::values(const PointSet& points) const {
  const Matrix k = gram(model_->kernel(), model_->anchors_x(), points);
  const Vector w = eval_weights(model_->kernel().weight, points);
  const Matrix pk = coeff_ * k;
  Vector out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out(i) = std::max(w(i) * w(i) + k.col(i).dot(pk.col(i)), 0.0);
  return out;
}

double LyapunovEstimate::tail_bound_at(const Eigen::Ref<const Vector>& x) const {
  const double wx = eval_weight(model_->kernel().weight, x);
  return cert_.tail(horizon_, std::max(c_max_, wx * wx));
}

double lyapunov_value(const LyapunovEstimate& est, const Eigen::Ref<const Vector>& x) { return est.value(x); }

double lyapunov_value_by_recursion(const KoopmanModel& model, const Eigen::Ref<const Vector>& x,
                                   int horizon) {
  const double wx = eval_weight(model.kernel().weight, x);
  double total = wx * wx;
  if (horizon < 1) return total;
  const Matrix step = model.theta().transpose() * model.cross();
  Vector b = adjoint_coeffs(model, x, 1);
  for (int t = 1; t <= horizon; ++t) {
    if (t > 1) b = step * b;
    total += b.dot(model.gram_target() * b);
  }
  return total;
}

ZubovEstimate::ZubovEstimate(const KoopmanModel& model, int steps, double nu, double varsigma)
    : model_(&model), steps_(steps), nu_(nu), varsigma_(varsigma) {
  if (model.mode() != ModelMode::Zubov)
    fail(ErrorKind::InvalidInput, "ZubovEstimate requires a Zubov-Koopman model");
  if (steps < 0) fail(ErrorKind::InvalidInput, "Zubov horizon must be >= 0");
  if (!(nu >= 1.0)) fail(ErrorKind::InvalidInput, "nu must be >= 1");
  if (!(varsigma > 0.0)) fail(ErrorKind::InvalidInput, "varsigma must be positive");
  const WeightSpec& w = model.kernel().weight;
  g0_.resize(model.size());
  for (Eigen::Index j = 0; j < model.size(); ++j)
    g0_(j) = zubov_observable(w, model.anchors_y().row(j).transpose(), nu, varsigma);
  if (steps >= 1) coeffs_ = forward_coeffs(model, g0_, steps);
}

double ZubovEstimate::value(const Eigen::Ref<const Vector>& x) const {
  if (steps_ == 0) return zubov_observable(model_->kernel().weight, x, nu_, varsigma_);
  return coeffs_.dot(kernel_column(*model_, x));
}

Vector ZubovEstimate::values(const PointSet& points) const {
  if (steps_ == 0) {
    Vector out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) out(i) = value(points.row(i).transpose());
    return out;
  }
  return gram(model_->kernel(), model_->anchors_x(), points).transpose() * coeffs_;
}

double zubov_value(const ZubovEstimate& est, const Eigen::Ref<const Vector>& x) { return est.value(x); }

int horizon_steps(double time, double dt) {
  if (!(time >= 0.0) || !(dt > 0.0)) fail(ErrorKind::InvalidInput, "horizon time must be >= 0 and dt > 0");
  return static_cast<int>(std::lround(time / dt));
}

double c_nu(double nu, double varsigma) {
  if (!(nu >= 1.0)) fail(ErrorKind::InvalidInput, "c_nu: nu must be >= 1");
  if (!(varsigma > 0.0)) fail(ErrorKind::InvalidInput, "c_nu: varsigma must be positive");
  if (nu == 1.0) return 1.0 / varsigma;
  return std::pow(nu - 1.0, (nu - 1.0) / nu) / (nu * varsigma);
}

GeneralizationTerms generalization_terms(double m, double gamma, double r, double delta) {
  if (!(m >= 1.0)) fail(ErrorKind::InvalidInput, "generalization_bound: m must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::InvalidInput, "generalization_bound: delta must lie in (0, 1)");
  if (!(gamma > 0.0)) fail(ErrorKind::InvalidInput, "generalization_bound: gamma must be positive");
  if (!(r >= 1.0)) fail(ErrorKind::InvalidInput, "generalization_bound: r must be >= 1");
  GeneralizationTerms out;
  const double log_y = std::log(6.0 / delta);
  const double log_x = std::log(12.0 * m * m / delta);
  out.eps_y = log_y / m + std::sqrt(8.0 / m * log_y);
  out.eps_x = 6.0 / m * log_x + std::sqrt(9.0 / m * log_x);
  out.rho_check = out.eps_y + gamma * (gamma + 2.0 * std::sqrt(r)) * out.eps_x;
  return out;
}

double generalization_bound(double m, double gamma, double r, double delta) {
  return generalization_terms(m, gamma, r, delta).rho_check;
}

double lyapunov_error_bound(double alpha, double qnorm, double rho) {
  if (!(alpha >= 0.0) || !(qnorm >= 0.0) || !(rho >= 0.0))
    fail(ErrorKind::InvalidInput, "lyapunov_error_bound: arguments must be nonnegative");
  if (alpha >= 1.0) return kInf;
  const double gap = 1.0 - alpha * alpha;
  return 2.0 * alpha * qnorm / (gap * gap) * std::sqrt(rho);
}

double zubov_error_bound(int t, double alpha, double rho, double nu, double varsigma) {
  if (t < 1) fail(ErrorKind::InvalidInput, "zubov_error_bound: t must be >= 1");
  if (!(alpha >= 0.0) || !(rho >= 0.0)) fail(ErrorKind::InvalidInput, "zubov_error_bound: negative argument");
  if (alpha >= 1.0) return kInf;
  return t * std::pow(alpha, t - 1) * std::sqrt(rho) * c_nu(nu, varsigma) / varsigma;
}

double MuTable::operator()(double a) const {
  if (levels.empty()) return kInf;
  if (a <= levels.front()) return mu.front();
  if (a > levels.back()) return kInf;
  const auto it = std::lower_bound(levels.begin(), levels.end(), a);
  const auto hi = static_cast<std::size_t>(it - levels.begin());
  const std::size_t lo = hi - 1;
  if (!std::isfinite(mu[hi]) || !std::isfinite(mu[lo])) return mu[hi];
  const double frac = (a - levels[lo]) / (levels[hi] - levels[lo]);
  return mu[lo] + frac * (mu[hi] - mu[lo]);
}

MuTable estimate_mu_table(const SystemSpec& sys, const EtaSpec& eta, const WeightSpec& w,
                          const DomainSpec& dom, const std::vector<double>& levels, int samples,
                          double dt, std::uint64_t seed, double tail_tol) {
  if (samples < 1) fail(ErrorKind::InvalidInput, "estimate_mu_table: samples must be >= 1");
  if (!std::is_sorted(levels.begin(), levels.end()))
    fail(ErrorKind::InvalidInput, "estimate_mu_table: levels must be increasing");
  std::mt19937_64 rng(seed);
  const Vector lo = dom.lower();
  const Vector hi = dom.upper();
  MuTable table;
  table.levels = levels;
  double running = 0.0;
  Vector z(dom.dimension);
  for (double a : levels) {
    const double radius = w.level_set_radius(a);
    std::vector<std::uniform_real_distribution<double>> coord;
    for (int c = 0; c < dom.dimension; ++c)
      coord.emplace_back(std::max(-radius, lo(c)), std::min(radius, hi(c)));
    double level_max = 0.0;
    int accepted = 0;
    for (long attempt = 0; accepted < samples && attempt < 1000000L; ++attempt) {
      for (int c = 0; c < dom.dimension; ++c) z(c) = coord[c](rng);
      if (z.norm() > radius || !dom.contains(z)) continue;
      ++accepted;
      level_max = std::max(level_max, accumulated_cost(sys, eta, z, dt, tail_tol));
    }
    running = std::max(running, level_max);
    table.mu.push_back(running);
  }
  return table;
}

std::optional<double> doa_level_threshold(double eta_lower, const std::function<double(double)>& mu,
                                          double alpha_lower, double varsigma, double lo, double hi) {
  if (!(eta_lower > 0.0)) fail(ErrorKind::InvalidInput, "doa_level_threshold: eta_lower must be positive");
  if (!(alpha_lower > 0.0 && alpha_lower < 1.0))
    fail(ErrorKind::InvalidInput, "doa_level_threshold: alpha_lower must lie in (0, 1)");
  if (!(varsigma > 0.0)) fail(ErrorKind::InvalidInput, "doa_level_threshold: varsigma must be positive");
  if (!(lo > 0.0 && lo < hi)) fail(ErrorKind::InvalidInput, "doa_level_threshold: need 0 < lo < hi");

  const auto feasible = [&](double a) {
    const double mu_a = mu(a);
    if (!std::isfinite(mu_a)) return false;
    return std::log(alpha_lower * a / varsigma) >=
           (mu_a + std::log(2.0)) / eta_lower * std::log(1.0 / alpha_lower);
  };
  const bool lo_ok = feasible(lo);
  const bool hi_ok = feasible(hi);
  if (hi_ok) {
    if (lo_ok) return hi;
  } else if (!lo_ok) {
    return std::nullopt;
  }
  // Exactly one endpoint is feasible; keep `good` feasible throughout.
  double good = lo_ok ? lo : hi;
  double bad = lo_ok ? hi : lo;
  for (int it = 0; it < 200 && std::abs(good - bad) > 1e-13 * std::max(1.0, std::abs(good)); ++it) {
    const double mid = 0.5 * (good + bad);
    (feasible(mid) ? good : bad) = mid;
  }
  return good;
}

PointSet grid_points(const DomainSpec& dom, int resolution) {
  if (resolution < 1) fail(ErrorKind::InvalidInput, "grid resolution must be >= 1");
  dom.validate();
  const Vector lo = dom.lower();
  const Vector hi = dom.upper();
  const int n = dom.dimension;
  Eigen::Index total = 1;
  for (int c = 0; c < n; ++c) total *= resolution;
  PointSet out(total, n);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (Eigen::Index row = 0; row < total; ++row) {
    for (int c = 0; c < n; ++c) {
      const double frac = resolution == 1 ? 0.5 : static_cast<double>(idx[c]) / (resolution - 1);
      out(row, c) = lo(c) + frac * (hi(c) - lo(c));
    }
    for (int c = n - 1; c >= 0; --c) {
      if (++idx[c] < resolution) break;
      idx[c] = 0;
    }
  }
  return out;
}

GridTable grid_eval(const std::function<double(const Vector&)>& fn, const DomainSpec& dom,
                    int resolution) {
  GridTable table;
  table.points = grid_points(dom, resolution);
  table.values.resize(table.points.rows());
  for (Eigen::Index i = 0; i < table.points.rows(); ++i) table.values(i) = fn(table.points.row(i).transpose());
  return table;
}

BoundReport make_bound_report(const KoopmanModel& model, double delta, const SnapshotDataset& train,
                              const SnapshotDataset& heldout, const std::optional<ZubovReportOptions>& zubov) {
  BoundReport rep;
  rep.m = static_cast<int>(model.size());
  rep.r = model.rank();
  rep.delta = delta;
  rep.beta = model.beta();
  rep.empirical_risk = empirical_risk(model);
  rep.gamma = hs_norm(model);
  rep.generalization = generalization_terms(rep.m, rep.gamma, rep.r, delta);
  rep.heldout_risk = heldout_risk(model, heldout);
  rep.heldout_size = static_cast<int>(heldout.size());
  rep.op_norm = op_norm(model);
  rep.op_norm_k_congruence = op_norm_k_congruence(model);
  rep.lambda_max_l = lambda_max(model.gram_target());
  rep.norm_bound = paper_norm_bound(model);
  const WeightSpec& w = model.kernel().weight;
  rep.alpha_hat = model.mode() == ModelMode::Zubov ? check_damped_decay_ratio(train, w)
                                                   : check_decay_ratio(train, w);
  rep.alpha_bar = std::max(rep.op_norm, rep.alpha_hat);
  rep.qnorm = 1.0;
  rep.lyapunov_constant = lyapunov_error_bound(rep.alpha_bar, 1.0, 1.0);
  rep.lyapunov_bound = lyapunov_error_bound(rep.alpha_bar, rep.qnorm, rep.heldout_risk);
  if (zubov) {
    rep.zubov = true;
    rep.zubov_steps = zubov->steps;
    rep.nu = zubov->nu;
    rep.varsigma = zubov->varsigma;
    rep.c_nu = c_nu(zubov->nu, zubov->varsigma);
    rep.zubov_bound = zubov->steps >= 1 ? zubov_error_bound(zubov->steps, rep.alpha_bar, rep.heldout_risk,
                                                            zubov->nu, zubov->varsigma)
                                        : 0.0;
  }
  return rep;
}

}  // namespace wkoopman
