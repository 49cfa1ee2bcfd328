#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "support.hpp"
#include "wkoopman/kernels.hpp"

using namespace wkoopman;
using wktest::error_kind_of;

namespace {

WeightedKernelSpec spec(double gamma, double p) {
  WeightedKernelSpec kw;
  kw.kernel.gamma = gamma;
  kw.weight.exponent = p;
  return kw;
}

}  // namespace

TEST_CASE("norm-power weight is the Euclidean norm at p = 1") {
  WeightSpec w;
  Vector x(2);
  x << 3.0, 4.0;
  CHECK(eval_weight(w, x) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(eval_weight(w, Vector::Zero(2)) == 0.0);
}

TEST_CASE("norm-power weight at p = 1/2") {
  WeightSpec w{WeightKind::NormPower, 0.5, 1e-8};
  Vector x(2);
  x << 0.0, 4.0;
  CHECK(eval_weight(w, x) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("exp-norm-power weight") {
  WeightSpec w{WeightKind::ExpNormPower, 2.0, 1e-8};
  Vector x(2);
  x << 0.6, 0.8;
  CHECK(eval_weight(w, x) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
  // expm1 keeps relative accuracy near the origin
  x << 1e-9, 0.0;
  CHECK(eval_weight(w, x) == doctest::Approx(1e-18).epsilon(1e-12));
}

TEST_CASE("level set radius inverts the weight") {
  for (auto kind : {WeightKind::NormPower, WeightKind::ExpNormPower}) {
    for (double p : {0.5, 1.0, 2.0}) {
      WeightSpec w{kind, p, 1e-8};
      for (double a : {0.1, 0.7, 1.3}) {
        Vector x = Vector::Zero(3);
        x(1) = w.level_set_radius(a);
        CHECK(eval_weight(w, x) == doctest::Approx(a).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("gaussian kernel against a hand evaluation") {
  KernelSpec k{KernelKind::Gaussian, 4.0};
  Vector x(2), y(2);
  x << 0.3, -0.2;
  y << -0.1, 0.5;
  const double d2 = 0.4 * 0.4 + 0.7 * 0.7;
  CHECK(eval_base_kernel(k, x, y) == doctest::Approx(std::exp(-4.0 * d2)).epsilon(1e-15));
  CHECK(eval_base_kernel(k, x, x) == 1.0);
}

TEST_CASE("weighted kernel factorizes and vanishes at the origin") {
  const auto kw = spec(4.0, 1.0);
  Vector x(2), y(2);
  x << 1.0, 1.0;
  y << 0.5, -0.5;
  CHECK(eval_weighted_kernel(kw, x, y) ==
        doctest::Approx(std::sqrt(2.0) * std::sqrt(0.5) * std::exp(-4.0 * (0.25 + 2.25))).epsilon(1e-14));
  CHECK(eval_weighted_kernel(kw, x, x) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(eval_weighted_kernel(kw, Vector::Zero(2), y) == 0.0);
}

TEST_CASE("gram matrix is symmetric, transposes exactly and is PSD") {
  const auto kw = spec(4.0, 1.0);
  const Matrix a = wktest::random_matrix(40, 2, 7, -2, 2);
  const Matrix b = wktest::random_matrix(25, 2, 8, -2, 2);
  const Matrix k = gram(kw, a, a);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Matrix kab = gram(kw, a, b);
  const Matrix kba = gram(kw, b, a);
  CHECK((kab - kba.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(k);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12 * es.eigenvalues().maxCoeff());
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 25; j += 6)
      CHECK(kab(i, j) == doctest::Approx(eval_weighted_kernel(kw, a.row(i).transpose(), b.row(j).transpose()))
                             .epsilon(1e-14));
}

TEST_CASE("eval_weights matches pointwise evaluation") {
  WeightSpec w{WeightKind::NormPower, 0.5, 1e-8};
  const Matrix pts = wktest::random_matrix(10, 3, 1);
  const Vector ws = eval_weights(w, pts);
  for (int i = 0; i < 10; ++i) CHECK(ws(i) == eval_weight(w, pts.row(i).transpose()));
}

TEST_CASE("invalid specs are rejected") {
  CHECK(error_kind_of([] { KernelSpec{KernelKind::Gaussian, 0.0}.validate(); }) == ErrorKind::InvalidInput);
  CHECK(error_kind_of([] { KernelSpec{KernelKind::Gaussian, -1.0}.validate(); }) == ErrorKind::InvalidInput);
  CHECK(error_kind_of([] { WeightSpec{WeightKind::NormPower, 0.0, 1e-8}.validate(); }) == ErrorKind::InvalidInput);
  CHECK(error_kind_of([] { WeightSpec{WeightKind::NormPower, 1.0, -1.0}.validate(); }) == ErrorKind::InvalidInput);
  const auto kw = spec(4.0, 1.0);
  CHECK(error_kind_of([&] { gram(kw, Matrix(0, 2), Matrix(3, 2)); }) == ErrorKind::InvalidInput);
  CHECK(error_kind_of([&] { gram(kw, Matrix::Zero(2, 2), Matrix::Zero(3, 3)); }) == ErrorKind::InvalidInput);
}

TEST_CASE("names round-trip") {
  for (auto k : {WeightKind::NormPower, WeightKind::ExpNormPower}) CHECK(parse_weight_kind(to_string(k)) == k);
  CHECK(parse_kernel_kind(to_string(KernelKind::Gaussian)) == KernelKind::Gaussian);
  CHECK(error_kind_of([] { parse_weight_kind("cubic"); }) == ErrorKind::Config);
}
