#include "wkoopman/eigsolve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "wkoopman/error.hpp"

namespace wkoopman {

namespace {

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0)
    fail(ErrorKind::InvalidInput, std::string(what) + ": matrix must be square and non-empty");
  if (!a.allFinite()) fail(ErrorKind::InvalidInput, std::string(what) + ": non-finite entries");
}

double asymmetry(const Matrix& a) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

Matrix cholesky_spd(const Matrix& b) {
  require_square(b, "cholesky_spd");
  if (asymmetry(b) > 1e-12) fail(ErrorKind::InvalidInput, "cholesky_spd: matrix is not symmetric");
  Eigen::LLT<Matrix> llt(b);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::NotPositiveDefinite, "cholesky_spd: non-positive pivot");
  Matrix l = llt.matrixL();
  return l;
}

SymmetricEigen symmetric_eig(const Matrix& s) {
  require_square(s, "symmetric_eig");
  if (asymmetry(s) > 1e-10) fail(ErrorKind::InvalidInput, "symmetric_eig: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success)
    fail(ErrorKind::SolverFailure, "symmetric_eig: QR iteration did not converge");
  // Eigen returns ascending order.
  SymmetricEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

double lambda_max(const Matrix& s) { return symmetric_eig(s).values(0); }

Matrix sqrt_psd(const Matrix& s) {
  const SymmetricEigen e = symmetric_eig(s);
  const Vector root = e.values.cwiseMax(0.0).cwiseSqrt();
  return e.vectors * root.asDiagonal() * e.vectors.transpose();
}

PencilSolution generalized_eig_topr(const Pencil& p, int r, const PencilOptions& opts) {
  require_square(p.m, "generalized_eig_topr");
  require_square(p.b, "generalized_eig_topr");
  if (p.m.rows() != p.b.rows()) fail(ErrorKind::InvalidInput, "generalized_eig_topr: M and B differ in size");
  const Eigen::Index n = p.m.rows();
  if (r < 1 || r > n)
    fail(ErrorKind::InvalidInput, "generalized_eig_topr: rank " + std::to_string(r) +
                                      " outside [1, " + std::to_string(n) + "]");

  const Matrix l = cholesky_spd(p.b);
  const auto lower = l.triangularView<Eigen::Lower>();
  // C = L^{-1} M L^{-T}
  Matrix tmp = lower.solve(p.m);
  Matrix c = lower.solve(tmp.transpose()).transpose();

  Eigen::EigenSolver<Matrix> solver(c, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success)
    fail(ErrorKind::SolverFailure, "generalized_eig_topr: Hessenberg-QR did not converge");
  const Eigen::VectorXcd lambda = solver.eigenvalues();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return lambda(a).real() > lambda(b).real();
  });

  PencilSolution out;
  out.values.resize(r);
  out.raw_real.resize(r);
  out.vectors.resize(n, r);
  const Eigen::MatrixXcd z = solver.eigenvectors();
  for (int i = 0; i < r; ++i) {
    const Eigen::Index k = order[static_cast<std::size_t>(i)];
    const double re = lambda(k).real();
    const double im = std::abs(lambda(k).imag());
    out.max_imag = std::max(out.max_imag, im);
    if (im > opts.realness_tol * (1.0 + std::abs(re)))
      fail(ErrorKind::SpectralAnomaly,
           "generalized_eig_topr: eigenvalue " + std::to_string(i) + " has imaginary part " +
               std::to_string(im) + " (real part " + std::to_string(re) + ")");
    out.raw_real(i) = re;
    out.values(i) = std::max(re, 0.0);
    // Rounding-level imaginary parts are dropped; the eigenvector is the
    // real part, which for a real eigenvalue spans the same line.
    Vector zi = z.col(k).real();
    if (zi.norm() == 0.0) zi = z.col(k).imag();
    Vector u = lower.transpose().solve(zi);
    const double un = u.norm();
    if (!(un > 0.0)) fail(ErrorKind::SolverFailure, "generalized_eig_topr: zero eigenvector");
    u /= un;
    // Deterministic sign: largest-magnitude entry positive.
    Eigen::Index imax = 0;
    u.cwiseAbs().maxCoeff(&imax);
    if (u(imax) < 0.0) u = -u;
    out.vectors.col(i) = u;
  }
  if (r < n) {
    const double next = lambda(order[static_cast<std::size_t>(r)]).real();
    const double here = out.raw_real(r - 1);
    out.tie_at_rank = std::abs(here - next) <= opts.tie_tol * std::max(std::abs(here), std::abs(next));
  }
  return out;
}

}  // namespace wkoopman
