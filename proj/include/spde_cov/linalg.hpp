#pragma once
// Dense matrix primitives shared by every other module. Matrices here are at
// most a few hundred rows, so everything is dense and factorized directly.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "spde_cov/error.hpp"

namespace spde_cov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SymEig {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns
};

inline double max_abs(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  return max_abs(a - a.transpose()) <= rel_tol * std::max(max_abs(a), 1e-300);
}

inline void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols())
    throw Error(ErrorKind::ShapeMismatch, std::string(who) + ": matrix is " +
                                              std::to_string(a.rows()) + "x" +
                                              std::to_string(a.cols()));
}

inline void require_finite(const Matrix& a, const char* who) {
  if (!a.allFinite()) throw Error(ErrorKind::InvalidArgument, std::string(who) + ": non-finite entry");
}

/// Symmetric eigendecomposition (Householder tridiagonalization + implicit QL).
/// Only the lower triangle is read once symmetry has been verified.
inline SymEig sym_eig(const Matrix& a) {
  require_square(a, "sym_eig");
  require_finite(a, "sym_eig");
  const double scale = max_abs(a);
  if (max_abs(a - a.transpose()) > 1e-9 * scale)
    throw Error(ErrorKind::NonSymmetric, "sym_eig: input is not symmetric");
  if (a.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::NoConvergence, "sym_eig: eigen iteration did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Square root of a symmetric positive semidefinite matrix. Eigenvalues in
/// [-tol * max(1, lambda_max), 0) are clamped to zero.
inline Matrix psd_sqrt(const Matrix& a, double tol = 1e-10) {
  const SymEig eig = sym_eig(a);
  if (eig.values.size() == 0) return Matrix(0, 0);
  const double top = eig.values.maxCoeff();
  const double floor = -tol * std::max(1.0, top);
  if (eig.values.minCoeff() < floor)
    throw Error(ErrorKind::NotPSD, "psd_sqrt: eigenvalue " + std::to_string(eig.values.minCoeff()) +
                                       " below tolerance");
  const Vector root = eig.values.cwiseMax(0.0).cwiseSqrt();
  return symmetrized(eig.vectors * root.asDiagonal() * eig.vectors.transpose());
}

/// LU factorization with partial pivoting, kept around so a fixed left factor
/// can be reused across many congruence solves.
class LuFactor {
 public:
  explicit LuFactor(const Matrix& l) {
    require_square(l, "LuFactor");
    require_finite(l, "LuFactor");
    lu_.compute(l);
    const double floor = 1e-14 * max_abs(l);
    const auto pivots = lu_.matrixLU().diagonal().cwiseAbs();
    if (l.rows() > 0 && (pivots.minCoeff() < floor || max_abs(l) == 0.0))
      throw Error(ErrorKind::Singular, "LU pivot below 1e-14 * max|L|");
  }

  Eigen::Index size() const { return lu_.matrixLU().rows(); }

  Matrix solve(const Matrix& rhs) const { return lu_.solve(rhs); }

  /// X with L X L^T = rhs, symmetrized before returning.
  Matrix congruence(const Matrix& rhs) const {
    const Matrix half = lu_.solve(rhs);                 // L^{-1} rhs
    const Matrix full = lu_.solve(half.transpose());    // L^{-1} (L^{-1} rhs)^T
    return symmetrized(full);
  }

  Matrix inverse() const { return lu_.inverse(); }

 private:
  Eigen::PartialPivLU<Matrix> lu_;
};

/// Solves L X L^T = rhs for X.
inline Matrix congruence_solve(const Matrix& l, const Matrix& rhs) {
  require_square(rhs, "congruence_solve");
  if (l.rows() != rhs.rows())
    throw Error(ErrorKind::ShapeMismatch, "congruence_solve: L and RHS sizes differ");
  return LuFactor(l).congruence(rhs);
}

}  // namespace spde_cov
