#pragma once
// Trace-class and Hilbert-Schmidt distances between two covariance operators
// sum k_mn phi_m (x) phi_n given on (possibly different) uniform meshes.

#include <cmath>
#include <string>

#include "spde_cov/error.hpp"
#include "spde_cov/fem1d.hpp"
#include "spde_cov/linalg.hpp"

namespace spde_cov {

namespace detail {

inline void check_cov_shape(const Matrix& k, const Mesh1D& mesh, const char* who) {
  if (k.rows() != mesh.dofs() || k.cols() != mesh.dofs())
    throw Error(ErrorKind::ShapeMismatch, std::string(who) + ": covariance does not match its mesh");
}

}  // namespace detail

/// Joint Gram matrix N = [[M_a, M_ab], [M_ba, M_b]] of the concatenated bases.
inline Matrix joint_gram(const Mesh1D& a, const Mesh1D& b) {
  const int na = a.dofs(), nb = b.dofs();
  Matrix n(na + nb, na + nb);
  const Matrix mab = cross_mass(a, b);
  n.topLeftCorner(na, na) = assemble_mass(a);
  n.topRightCorner(na, nb) = mab;
  n.bottomLeftCorner(nb, na) = mab.transpose();
  n.bottomRightCorner(nb, nb) = assemble_mass(b);
  return n;
}

/// ||K - K_ref||_{L1}: sum of |eigenvalues| of sqrt(N) diag(K, -K_ref) sqrt(N).
/// N is singular for nested meshes. Its eigenvalues below 1e-13 of the largest
/// are numerically zero and dropped before the square root, which would
/// otherwise amplify their roundoff.
inline double err_trace_norm(const Matrix& k, const Mesh1D& mesh, const Matrix& k_ref,
                             const Mesh1D& mesh_ref) {
  detail::check_cov_shape(k, mesh, "err_trace_norm");
  detail::check_cov_shape(k_ref, mesh_ref, "err_trace_norm");
  const int na = mesh.dofs(), nb = mesh_ref.dofs();
  const SymEig gram = sym_eig(joint_gram(mesh, mesh_ref));
  const double cut = 1e-13 * gram.values.cwiseAbs().maxCoeff();
  const Vector roots = gram.values.unaryExpr([cut](double v) { return v > cut ? std::sqrt(v) : 0.0; });
  const Matrix root = gram.vectors * roots.asDiagonal() * gram.vectors.transpose();
  Matrix d = Matrix::Zero(na + nb, na + nb);
  d.topLeftCorner(na, na) = symmetrized(k);
  d.bottomRightCorner(nb, nb) = -symmetrized(k_ref);
  const Matrix w = symmetrized(root * d * root);
  return sym_eig(w).values.cwiseAbs().sum();
}

/// ||K - K_ref||_{L2} from tr((K M)^2) - 2 tr(K M_ab K_ref M_ba) + tr((K_ref M_ref)^2).
inline double err_hs_norm(const Matrix& k, const Mesh1D& mesh, const Matrix& k_ref,
                          const Mesh1D& mesh_ref) {
  detail::check_cov_shape(k, mesh, "err_hs_norm");
  detail::check_cov_shape(k_ref, mesh_ref, "err_hs_norm");
  const Matrix km = k * assemble_mass(mesh);
  const Matrix krm = k_ref * assemble_mass(mesh_ref);
  const Matrix mab = cross_mass(mesh, mesh_ref);
  const double self = (km * km).trace();
  const double other = (krm * krm).trace();
  const double cross = (k * mab * k_ref * mab.transpose()).trace();
  const double sq = self - 2.0 * cross + other;
  const double lead = std::abs(self) + std::abs(other);
  if (sq < 0.0) {
    if (sq < -1e-10 * lead)
      throw Error(ErrorKind::NegativeSquare, "err_hs_norm: squared norm " + std::to_string(sq));
    return 0.0;
  }
  return std::sqrt(sq);
}

/// Smallest eigenvalue of sqrt(G) K sqrt(G) relative to its largest |eigenvalue|
/// (0 for the zero operator). G is the Gram matrix of the basis K lives in.
inline double min_relative_eigenvalue(const Matrix& k, const Matrix& gram) {
  const Matrix root = psd_sqrt(gram);
  const Vector ev = sym_eig(symmetrized(root * k * root)).values;
  if (ev.size() == 0) return 0.0;
  const double top = ev.cwiseAbs().maxCoeff();
  return top == 0.0 ? 0.0 : ev.minCoeff() / top;
}

}  // namespace spde_cov
