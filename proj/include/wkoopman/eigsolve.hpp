#pragma once

#include <vector>

#include "wkoopman/types.hpp"

namespace wkoopman {

/// Lower-triangular L with L L^T = B. Throws NotPositiveDefinite.
Matrix cholesky_spd(const Matrix& b);

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns, matching `values`
};

SymmetricEigen symmetric_eig(const Matrix& s);

/// Largest eigenvalue of a symmetric matrix.
double lambda_max(const Matrix& s);

/// Principal square root of a symmetric PSD matrix (negative eigenvalues
/// from rounding are clamped to zero).
Matrix sqrt_psd(const Matrix& s);

/// M u = sigma^2 B u with B symmetric positive definite and M generally
/// nonsymmetric.
struct Pencil {
  Matrix m;
  Matrix b;
};

struct PencilSolution {
  Vector values;   // sigma^2, nonincreasing, clamped at 0
  Matrix vectors;  // u_i as columns, unit Euclidean norm
  Vector raw_real;  // unclamped real parts of the returned eigenvalues
  double max_imag = 0.0;  // largest |imaginary part| among the returned eigenvalues
  bool tie_at_rank = false;
};

struct PencilOptions {
  // Relative threshold |Im| <= tol (1 + |Re|) under which an eigenvalue is
  // treated as real.
  double realness_tol = 1e-6;
  double tie_tol = 1e-12;
};

/// Top-r eigenpairs of the pencil via the Cholesky congruence
/// C = L^{-1} M L^{-T}, C z = sigma^2 z, u = L^{-T} z.
PencilSolution generalized_eig_topr(const Pencil& p, int r, const PencilOptions& opts = {});

}  // namespace wkoopman
