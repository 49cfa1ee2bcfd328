#pragma once

#include "wkoopman/types.hpp"

namespace wkoopman {

enum class WeightKind { NormPower, ExpNormPower };

/// Stability-certificate weighting w with w(0) = 0.
///
/// NormPower:     w(x) = |x|^p
/// ExpNormPower:  w(x) = exp(|x|^p) - 1
///
/// `floor` is the threshold below which a sample is considered degenerate
/// (its weighted kernel section is numerically zero) and is dropped when a
/// dataset is assembled.
struct WeightSpec {
  WeightKind kind = WeightKind::NormPower;
  double exponent = 1.0;
  double floor = 1e-8;

  void validate() const;

  /// Radius of the Euclidean ball {x : w(x) <= level}.
  [[nodiscard]] double level_set_radius(double level) const;
};

enum class KernelKind { Gaussian };

/// k(x, y) = exp(-gamma |x - y|^2). Only the Gaussian family is shipped.
struct KernelSpec {
  KernelKind kind = KernelKind::Gaussian;
  double gamma = 4.0;

  void validate() const;
};

/// k_w(x, y) = w(x) w(y) k(x, y).
struct WeightedKernelSpec {
  KernelSpec kernel;
  WeightSpec weight;

  void validate() const {
    kernel.validate();
    weight.validate();
  }
};

double eval_weight(const WeightSpec& w, const Eigen::Ref<const Vector>& x);

double eval_base_kernel(const KernelSpec& k, const Eigen::Ref<const Vector>& x,
                        const Eigen::Ref<const Vector>& y);

double eval_weighted_kernel(const WeightedKernelSpec& kw, const Eigen::Ref<const Vector>& x,
                            const Eigen::Ref<const Vector>& y);

/// w evaluated at every row of `points`.
Vector eval_weights(const WeightSpec& w, const PointSet& points);

/// Matrix with entry (i, j) = k_w(a_i, b_j), points given as rows.
Matrix gram(const WeightedKernelSpec& kw, const PointSet& a, const PointSet& b);

const char* to_string(WeightKind kind) noexcept;
const char* to_string(KernelKind kind) noexcept;
WeightKind parse_weight_kind(const std::string& name);
KernelKind parse_kernel_kind(const std::string& name);

}  // namespace wkoopman
