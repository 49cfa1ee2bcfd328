#include "wkoopman/kernels.hpp"

#include <cmath>
#include <string>

#include "wkoopman/error.hpp"

namespace wkoopman {

namespace {

void require_finite(const Eigen::Ref<const Vector>& x, const char* what) {
  if (!x.allFinite()) fail(ErrorKind::InvalidInput, std::string(what) + ": non-finite state");
}

double weight_of_norm(const WeightSpec& w, double norm) {
  // pow(0, p) is exactly 0 for p > 0, and expm1(0) is exactly 0.
  const double r = std::pow(norm, w.exponent);
  switch (w.kind) {
    case WeightKind::NormPower: return r;
    case WeightKind::ExpNormPower: return std::expm1(r);
  }
  return r;
}

}  // namespace

void WeightSpec::validate() const {
  if (!(exponent > 0.0) || !std::isfinite(exponent))
    fail(ErrorKind::InvalidInput, "weight.exponent must be a positive finite number");
  if (!(floor >= 0.0) || !std::isfinite(floor))
    fail(ErrorKind::InvalidInput, "weight.floor must be nonnegative");
}

double WeightSpec::level_set_radius(double level) const {
  if (level <= 0.0) return 0.0;
  switch (kind) {
    case WeightKind::NormPower: return std::pow(level, 1.0 / exponent);
    case WeightKind::ExpNormPower: return std::pow(std::log1p(level), 1.0 / exponent);
  }
  return 0.0;
}

void KernelSpec::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    fail(ErrorKind::InvalidInput, "kernel.gamma must be a positive finite number");
}

double eval_weight(const WeightSpec& w, const Eigen::Ref<const Vector>& x) {
  require_finite(x, "eval_weight");
  return weight_of_norm(w, x.norm());
}

double eval_base_kernel(const KernelSpec& k, const Eigen::Ref<const Vector>& x,
                        const Eigen::Ref<const Vector>& y) {
  require_finite(x, "eval_base_kernel");
  require_finite(y, "eval_base_kernel");
  if (x.size() != y.size()) fail(ErrorKind::InvalidInput, "eval_base_kernel: dimension mismatch");
  return std::exp(-k.gamma * (x - y).squaredNorm());
}

double eval_weighted_kernel(const WeightedKernelSpec& kw, const Eigen::Ref<const Vector>& x,
                            const Eigen::Ref<const Vector>& y) {
  return eval_weight(kw.weight, x) * eval_weight(kw.weight, y) * eval_base_kernel(kw.kernel, x, y);
}

Vector eval_weights(const WeightSpec& w, const PointSet& points) {
  if (!points.allFinite()) fail(ErrorKind::InvalidInput, "eval_weights: non-finite state");
  Vector out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out(i) = weight_of_norm(w, points.row(i).norm());
  return out;
}

Matrix gram(const WeightedKernelSpec& kw, const PointSet& a, const PointSet& b) {
  if (a.rows() == 0 || b.rows() == 0) fail(ErrorKind::InvalidInput, "gram: empty point list");
  if (a.cols() != b.cols()) fail(ErrorKind::InvalidInput, "gram: dimension mismatch");
  const Vector wa = eval_weights(kw.weight, a);
  const Vector wb = eval_weights(kw.weight, b);
  const Eigen::Index n = a.cols();
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double d2 = 0.0;
      for (Eigen::Index c = 0; c < n; ++c) {
        const double d = a(i, c) - b(j, c);
        d2 += d * d;
      }
      // Same association order as eval_weighted_kernel, so the transpose
      // identity gram(A,B)^T == gram(B,A) holds bit-for-bit.
      out(i, j) = wa(i) * wb(j) * std::exp(-kw.kernel.gamma * d2);
    }
  }
  return out;
}

const char* to_string(WeightKind kind) noexcept {
  return kind == WeightKind::NormPower ? "norm-power" : "exp-norm-power";
}

const char* to_string(KernelKind) noexcept { return "gaussian"; }

WeightKind parse_weight_kind(const std::string& name) {
  if (name == "norm-power") return WeightKind::NormPower;
  if (name == "exp-norm-power") return WeightKind::ExpNormPower;
  fail(ErrorKind::Config, "unknown weight.kind '" + name + "'");
}

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "gaussian") return KernelKind::Gaussian;
  fail(ErrorKind::Config, "unknown kernel.kind '" + name + "'");
}

}  // namespace wkoopman
