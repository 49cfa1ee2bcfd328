#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/LU>

#include "support.hpp"
#include "wkoopman/eigsolve.hpp"

using namespace wkoopman;
using wktest::error_kind_of;

namespace {

Matrix random_spd(int n, std::uint64_t seed) {
  const Matrix a = wktest::random_matrix(n, n, seed);
  return a * a.transpose() + 0.5 * Matrix::Identity(n, n);
}

// B V diag(values) V^{-1}: the pencil (M, B) then has eigenvalues `values`
// with eigenvectors the columns of V.
Matrix planted(const Matrix& b, const Matrix& v, const Vector& values) {
  return b * v * values.asDiagonal() * v.inverse();
}

}  // namespace

TEST_CASE("cholesky of a 2x2") {
  Matrix b(2, 2);
  b << 4, 2, 2, 3;
  const Matrix l = cholesky_spd(b);
  CHECK(l(0, 0) == 2.0);
  CHECK(l(0, 1) == 0.0);
  CHECK(l(1, 0) == 1.0);
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("cholesky rejects bad input") {
  Matrix indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK(error_kind_of([&] { cholesky_spd(indefinite); }) == ErrorKind::NotPositiveDefinite);
  Matrix asym(2, 2);
  asym << 2, 1, 0, 2;
  CHECK(error_kind_of([&] { cholesky_spd(asym); }) == ErrorKind::InvalidInput);
  CHECK(error_kind_of([&] { cholesky_spd(Matrix::Identity(2, 3)); }) == ErrorKind::InvalidInput);
}

TEST_CASE("cholesky factor reproduces a random SPD matrix") {
  const Matrix b = random_spd(12, 3);
  const Matrix l = cholesky_spd(b);
  CHECK((l * l.transpose() - b).norm() < 1e-12 * b.norm());
  CHECK(l.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().norm() == 0.0);
}

TEST_CASE("symmetric eigendecomposition is descending and reconstructs") {
  const Matrix s = random_spd(9, 4) - 2.0 * Matrix::Identity(9, 9);
  const SymmetricEigen e = symmetric_eig(s);
  for (int i = 1; i < 9; ++i) CHECK(e.values(i - 1) >= e.values(i));
  CHECK((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - s).norm() < 1e-12 * s.norm());
  CHECK(lambda_max(s) == doctest::Approx(e.values(0)).epsilon(1e-14));
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 1.0, 5.0, -2.0;
  CHECK(lambda_max(d) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("PSD square root") {
  const Matrix s = random_spd(7, 5);
  const Matrix r = sqrt_psd(s);
  CHECK((r * r - s).norm() < 1e-12 * s.norm());
  CHECK((r - r.transpose()).norm() < 1e-13);
  Matrix diag = Matrix::Zero(2, 2);
  diag.diagonal() << 9.0, -1e-18;
  const Matrix rd = sqrt_psd(diag);
  CHECK(rd(0, 0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(rd(1, 1) == 0.0);
}

TEST_CASE("pencil with planted spectrum") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + trial;
    const int r = std::max(1, n / 3);
    const Matrix b = random_spd(n, 100 + trial);
    const Matrix v = Matrix::Identity(n, n) + 0.3 / std::sqrt(n) * wktest::random_matrix(n, n, 200 + trial);
    Vector values(n);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int i = 0; i < n; ++i) values(i) = u(rng);
    const Matrix m = planted(b, v, values);
    const PencilSolution sol = generalized_eig_topr({m, b}, r);
    std::vector<double> sorted(values.data(), values.data() + n);
    std::sort(sorted.rbegin(), sorted.rend());
    const double scale = m.norm() + b.norm();
    for (int i = 0; i < r; ++i) {
      CHECK(sol.values(i) == doctest::Approx(sorted[i]).epsilon(1e-10));
      const Vector ui = sol.vectors.col(i);
      CHECK(ui.norm() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK((m * ui - sol.values(i) * b * ui).norm() <= 1e-8 * scale);
    }
    CHECK(sol.max_imag < 1e-8);
  }
}

TEST_CASE("pencil eigenvectors carry a deterministic sign") {
  const Matrix b = random_spd(6, 1);
  Vector values(6);
  values << 6, 5, 4, 3, 2, 1;
  const Matrix m = planted(b, Matrix::Identity(6, 6), values);
  const PencilSolution a = generalized_eig_topr({m, b}, 3);
  const PencilSolution c = generalized_eig_topr({m, b}, 3);
  CHECK(a.vectors == c.vectors);
  for (int i = 0; i < 3; ++i) {
    Eigen::Index k = 0;
    a.vectors.col(i).cwiseAbs().maxCoeff(&k);
    CHECK(a.vectors(k, i) > 0.0);
  }
}

TEST_CASE("negative rounding eigenvalues are clamped") {
  const Matrix b = Matrix::Identity(3, 3);
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 2.0, 1.0, -1e-17;
  const PencilSolution sol = generalized_eig_topr({m, b}, 3);
  CHECK(sol.values(2) == 0.0);
  CHECK(sol.raw_real(2) < 0.0);
}

TEST_CASE("complex top eigenvalues are a spectral anomaly") {
  Matrix m(2, 2);
  m << 0, -1, 1, 0;
  CHECK(error_kind_of([&] { generalized_eig_topr({m, Matrix::Identity(2, 2)}, 1); }) == ErrorKind::SpectralAnomaly);
}

TEST_CASE("ties at the rank boundary are flagged") {
  Matrix m = Matrix::Zero(4, 4);
  m.diagonal() << 4.0, 3.0, 3.0, 1.0;
  const Matrix b = Matrix::Identity(4, 4);
  CHECK(generalized_eig_topr({m, b}, 2).tie_at_rank);
  CHECK_FALSE(generalized_eig_topr({m, b}, 1).tie_at_rank);
  CHECK_FALSE(generalized_eig_topr({m, b}, 3).tie_at_rank);
}

TEST_CASE("pencil argument checks") {
  const Matrix i3 = Matrix::Identity(3, 3);
  CHECK(error_kind_of([&] { generalized_eig_topr({i3, i3}, 0); }) == ErrorKind::InvalidInput);
  CHECK(error_kind_of([&] { generalized_eig_topr({i3, i3}, 4); }) == ErrorKind::InvalidInput);
  CHECK(error_kind_of([&] { generalized_eig_topr({i3, Matrix::Identity(2, 2)}, 1); }) == ErrorKind::InvalidInput);
  CHECK(error_kind_of([&] { generalized_eig_topr({i3, -i3}, 1); }) == ErrorKind::NotPositiveDefinite);
}
