#include "wkoopman/dynsys.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "wkoopman/error.hpp"

namespace wkoopman {

namespace {

void require_state(const SystemSpec& sys, const Eigen::Ref<const Vector>& x) {
  if (x.size() != sys.dimension)
    fail(ErrorKind::InvalidInput, "state dimension " + std::to_string(x.size()) +
                                      " does not match system dimension " +
                                      std::to_string(sys.dimension));
  if (!x.allFinite()) fail(ErrorKind::InvalidInput, "non-finite state");
}

bool escaped(const Eigen::Ref<const Vector>& x) { return !x.allFinite() || x.norm() > kBlowupNorm; }

Vector rk4(const SystemSpec& sys, const Eigen::Ref<const Vector>& x, double h) {
  const Vector k1 = vector_field(sys, x);
  const Vector x2 = x + 0.5 * h * k1;
  if (!x2.allFinite()) fail(ErrorKind::IntegrationBlowup, "RK4 stage 2 left the finite range");
  const Vector k2 = vector_field(sys, x2);
  const Vector x3 = x + 0.5 * h * k2;
  if (!x3.allFinite()) fail(ErrorKind::IntegrationBlowup, "RK4 stage 3 left the finite range");
  const Vector k3 = vector_field(sys, x3);
  const Vector x4 = x + h * k3;
  if (!x4.allFinite()) fail(ErrorKind::IntegrationBlowup, "RK4 stage 4 left the finite range");
  const Vector k4 = vector_field(sys, x4);
  Vector out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) fail(ErrorKind::IntegrationBlowup, "RK4 step left the finite range");
  return out;
}

}  // namespace

void SystemSpec::validate() const {
  if (kind == SystemKind::LinearContraction) {
    if (dimension < 1) fail(ErrorKind::InvalidInput, "system.dimension must be >= 1");
    if (!(contraction > 0.0 && contraction < 1.0))
      fail(ErrorKind::InvalidInput, "system.contraction must lie in (0, 1)");
  } else if (dimension != 2) {
    fail(ErrorKind::InvalidInput, "example systems are two-dimensional");
  }
}

DomainSpec DomainSpec::ball(int dimension, double radius) {
  DomainSpec d;
  d.kind = DomainKind::Ball;
  d.dimension = dimension;
  d.radius = radius;
  return d;
}

DomainSpec DomainSpec::box(Vector lo, Vector hi) {
  DomainSpec d;
  d.kind = DomainKind::Box;
  d.dimension = static_cast<int>(lo.size());
  d.lo = std::move(lo);
  d.hi = std::move(hi);
  return d;
}

void DomainSpec::validate() const {
  if (dimension < 1) fail(ErrorKind::InvalidInput, "domain dimension must be >= 1");
  if (kind == DomainKind::Ball) {
    if (!(radius > 0.0) || !std::isfinite(radius))
      fail(ErrorKind::InvalidInput, "domain.radius must be positive");
    return;
  }
  if (lo.size() != dimension || hi.size() != dimension)
    fail(ErrorKind::InvalidInput, "domain.lo/hi must have one entry per coordinate");
  if (!lo.allFinite() || !hi.allFinite() || !(lo.array() < hi.array()).all())
    fail(ErrorKind::InvalidInput, "domain requires lo < hi componentwise");
}

bool DomainSpec::contains(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dimension) return false;
  if (kind == DomainKind::Ball) return x.norm() <= radius;
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

Vector DomainSpec::lower() const {
  return kind == DomainKind::Ball ? Vector::Constant(dimension, -radius) : lo;
}

Vector DomainSpec::upper() const {
  return kind == DomainKind::Ball ? Vector::Constant(dimension, radius) : hi;
}

void EtaSpec::validate() const {
  // scale = 0 is the undamped limit and reduces the Zubov-Koopman fit to
  // the plain Koopman fit.
  if (!(scale >= 0.0) || !std::isfinite(scale))
    fail(ErrorKind::InvalidInput, "eta.scale must be nonnegative");
}

double EtaSpec::operator()(const Eigen::Ref<const Vector>& x) const { return scale * x.squaredNorm(); }

Vector vector_field(const SystemSpec& sys, const Eigen::Ref<const Vector>& x) {
  require_state(sys, x);
  Vector dx(x.size());
  switch (sys.kind) {
    case SystemKind::Example1: {
      constexpr double two_pi = 2.0 * std::numbers::pi;
      dx(0) = -3.0 * x(0) + x(1) + std::sin(two_pi * x(0)) / two_pi;
      dx(1) = x(0) - x(1);
      break;
    }
    case SystemKind::Example2: {
      const double p = x(0) * x(1) - 1.0;
      dx(0) = -x(0);
      dx(1) = p * x(1) * x(1) * x(1) + (p + x(0) * x(0)) * x(1);
      break;
    }
    case SystemKind::LinearContraction:
      // Continuous-time counterpart of f(x) = a x.
      dx = std::log(sys.contraction) * x;
      break;
  }
  return dx;
}

Vector step(const SystemSpec& sys, const Eigen::Ref<const Vector>& x, double dt) {
  if (!(dt > 0.0)) fail(ErrorKind::InvalidInput, "step: dt must be positive");
  require_state(sys, x);
  if (sys.kind == SystemKind::LinearContraction) return sys.contraction * x;
  return rk4(sys, x, dt);
}

PointSet trajectory(const SystemSpec& sys, const Eigen::Ref<const Vector>& x0, double dt, int steps) {
  if (steps < 0) fail(ErrorKind::InvalidInput, "trajectory: steps must be >= 0");
  PointSet out(steps + 1, x0.size());
  out.row(0) = x0.transpose();
  Vector x = x0;
  for (int t = 1; t <= steps; ++t) {
    try {
      x = step(sys, x, dt);
    } catch (const Error& e) {
      fail(e.kind(), std::string(e.what()) + " at step " + std::to_string(t));
    }
    out.row(t) = x.transpose();
  }
  return out;
}

PointSet sample_uniform(const DomainSpec& dom, int m, std::uint64_t seed) {
  return sample_uniform(dom, m, seed, [](const Vector&) { return true; });
}

PointSet sample_uniform(const DomainSpec& dom, int m, std::uint64_t seed,
                        const std::function<bool(const Vector&)>& keep) {
  if (m < 1) fail(ErrorKind::InvalidInput, "sample_uniform: m must be >= 1");
  dom.validate();
  std::mt19937_64 rng(seed);
  const Vector lo = dom.lower();
  const Vector hi = dom.upper();
  std::vector<std::uniform_real_distribution<double>> coord;
  coord.reserve(dom.dimension);
  for (int c = 0; c < dom.dimension; ++c) coord.emplace_back(lo(c), hi(c));

  PointSet out(m, dom.dimension);
  Vector z(dom.dimension);
  long attempts = 0;
  const long cap = 10000000L + 1000L * m;
  for (int i = 0; i < m;) {
    if (++attempts > cap) fail(ErrorKind::DegenerateDomain, "sample_uniform: acceptance region has negligible mass");
    for (int c = 0; c < dom.dimension; ++c) z(c) = coord[c](rng);
    if (dom.kind == DomainKind::Ball && z.norm() > dom.radius) continue;
    if (!keep(z)) continue;
    out.row(i++) = z.transpose();
  }
  return out;
}

SnapshotDataset make_dataset(const SystemSpec& sys, const DomainSpec& dom, int m, double dt,
                             std::uint64_t seed, const WeightSpec& w,
                             const std::optional<EtaSpec>& eta) {
  sys.validate();
  dom.validate();
  w.validate();
  if (eta) eta->validate();
  if (dom.dimension != sys.dimension)
    fail(ErrorKind::InvalidInput, "domain and system dimensions differ");
  if (!(dt > 0.0)) fail(ErrorKind::InvalidInput, "dt must be positive");

  const PointSet candidates = sample_uniform(dom, m, seed);
  std::vector<Eigen::Index> keep;
  keep.reserve(m);
  for (Eigen::Index i = 0; i < candidates.rows(); ++i)
    if (eval_weight(w, candidates.row(i).transpose()) >= w.floor) keep.push_back(i);

  if (2 * static_cast<int>(keep.size()) < m)
    fail(ErrorKind::DegenerateDomain, "only " + std::to_string(keep.size()) + " of " +
                                          std::to_string(m) + " samples pass the weight floor");

  SnapshotDataset ds;
  ds.dt = dt;
  ds.seed = seed;
  ds.rejected_count = m - static_cast<int>(keep.size());
  const auto kept = static_cast<Eigen::Index>(keep.size());
  ds.x.resize(kept, sys.dimension);
  ds.y.resize(kept, sys.dimension);
  if (eta) ds.eta_x = Vector(kept);
  for (Eigen::Index i = 0; i < kept; ++i) {
    const Vector xi = candidates.row(keep[i]).transpose();
    ds.x.row(i) = xi.transpose();
    ds.y.row(i) = step(sys, xi, dt).transpose();
    if (eta) (*ds.eta_x)(i) = (*eta)(xi);
  }
  return ds;
}

double check_decay_ratio(const SnapshotDataset& ds, const WeightSpec& w) {
  const Vector wx = eval_weights(w, ds.x);
  const Vector wy = eval_weights(w, ds.y);
  if ((wx.array() <= 0.0).any()) fail(ErrorKind::InvalidInput, "check_decay_ratio: w(x_i) must be > 0");
  return (wy.array() / wx.array()).maxCoeff();
}

double check_damped_decay_ratio(const SnapshotDataset& ds, const WeightSpec& w) {
  if (!ds.eta_x) fail(ErrorKind::InvalidInput, "check_damped_decay_ratio: dataset has no eta values");
  const Vector wx = eval_weights(w, ds.x);
  const Vector wy = eval_weights(w, ds.y);
  if ((wx.array() <= 0.0).any())
    fail(ErrorKind::InvalidInput, "check_damped_decay_ratio: w(x_i) must be > 0");
  return ((-ds.eta_x->array()).exp() * wy.array() / wx.array()).maxCoeff();
}

double oracle_lyapunov(const SystemSpec& sys, const WeightedKernelSpec& kw,
                       const Eigen::Ref<const Vector>& x, double dt, double tail_tol) {
  if (!(tail_tol > 0.0)) fail(ErrorKind::InvalidInput, "oracle_lyapunov: tail_tol must be positive");
  Vector state = x;
  double w_prev = eval_weight(kw.weight, state);
  if (w_prev == 0.0) return 0.0;
  // k(x, x) = 1 for the Gaussian base kernel, so k_w(x, x) = w(x)^2.
  double total = w_prev * w_prev;
  for (int t = 1; t <= kMaxTrajectorySteps; ++t) {
    state = step(sys, state, dt);
    if (escaped(state)) fail(ErrorKind::Divergence, "oracle_lyapunov: trajectory diverged");
    const double w_now = eval_weight(kw.weight, state);
    const double term = w_now * w_now;
    total += term;
    if (term == 0.0) return total;
    const double ratio = w_now / w_prev;
    if (ratio < 1.0 && term < tail_tol && term * ratio * ratio / (1.0 - ratio * ratio) < tail_tol)
      return total;
    w_prev = w_now;
  }
  fail(ErrorKind::Divergence, "oracle_lyapunov: weight did not decay within the step cap");
}

double zubov_observable(const WeightSpec& w, const Eigen::Ref<const Vector>& z, double nu,
                        double varsigma) {
  const double wn = std::pow(eval_weight(w, z), nu);
  return wn / (wn + std::pow(varsigma, nu));
}

double oracle_zubov(const SystemSpec& sys, const WeightSpec& w, const EtaSpec& eta,
                    const Eigen::Ref<const Vector>& x, double dt, int steps, double nu,
                    double varsigma) {
  if (steps < 0) fail(ErrorKind::InvalidInput, "oracle_zubov: steps must be >= 0");
  Vector state = x;
  double cost = 0.0;
  for (int s = 0; s < steps; ++s) {
    cost += eta(state);
    try {
      state = step(sys, state, dt);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::IntegrationBlowup) return 0.0;
      throw;
    }
    if (escaped(state)) return 0.0;
  }
  return std::exp(-cost) * zubov_observable(w, state, nu, varsigma);
}

double accumulated_cost(const SystemSpec& sys, const EtaSpec& eta, const Eigen::Ref<const Vector>& x,
                        double dt, double tail_tol) {
  Vector state = x;
  double prev = eta(state);
  double total = prev;
  if (prev == 0.0) return 0.0;
  for (int t = 1; t <= kMaxTrajectorySteps; ++t) {
    try {
      state = step(sys, state, dt);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::IntegrationBlowup) return std::numeric_limits<double>::infinity();
      throw;
    }
    if (escaped(state)) return std::numeric_limits<double>::infinity();
    const double term = eta(state);
    total += term;
    if (term == 0.0) return total;
    const double ratio = term / prev;
    if (ratio < 1.0 && term * ratio / (1.0 - ratio) < tail_tol) return total;
    prev = term;
  }
  return std::numeric_limits<double>::infinity();
}

const char* to_string(SystemKind kind) noexcept {
  switch (kind) {
    case SystemKind::Example1: return "example1";
    case SystemKind::Example2: return "example2";
    case SystemKind::LinearContraction: return "linear-contraction";
  }
  return "unknown";
}

const char* to_string(DomainKind kind) noexcept { return kind == DomainKind::Ball ? "ball" : "box"; }

SystemKind parse_system_kind(const std::string& name) {
  if (name == "example1") return SystemKind::Example1;
  if (name == "example2") return SystemKind::Example2;
  if (name == "linear-contraction") return SystemKind::LinearContraction;
  fail(ErrorKind::Config, "unknown system.kind '" + name + "'");
}

DomainKind parse_domain_kind(const std::string& name) {
  if (name == "ball") return DomainKind::Ball;
  if (name == "box") return DomainKind::Box;
  fail(ErrorKind::Config, "unknown domain.kind '" + name + "'");
}

}  // namespace wkoopman
