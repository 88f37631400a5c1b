#pragma once
// Reference covariances in the Dirichlet eigenbasis e_k = sqrt(2) sin(k pi x),
// lambda_k = (k pi)^2. These never touch the finite element code paths, so they
// serve as independent checks of the FEM recursions.

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <numbers>
#include <variant>
#include <vector>

#include "spde_cov/advdiff.hpp"
#include "spde_cov/error.hpp"
#include "spde_cov/kernels.hpp"
#include "spde_cov/linalg.hpp"
#include "spde_cov/quadrature.hpp"
#include "spde_cov/wave.hpp"

namespace spde_cov {

inline double dirichlet_eigenvalue(int k) {
  const double w = k * std::numbers::pi;
  return w * w;
}

/// Mode variances q_k (1 - exp(-2 lambda_k T)) / (2 lambda_k), k = 1..n_modes.
inline Vector heat_cov_closed_form(int n_modes, double T, const Vector& q_diag) {
  if (q_diag.size() != n_modes) throw Error(ErrorKind::ShapeMismatch, "heat_cov_closed_form: q_diag size");
  Vector out(n_modes);
  for (int k = 1; k <= n_modes; ++k) {
    const double lam = dirichlet_eigenvalue(k);
    out[k - 1] = q_diag[k - 1] * (-std::expm1(-2.0 * lam * T)) / (2.0 * lam);
  }
  return out;
}

/// Position variances q_k (T/2 - sin(2 sqrt(lambda_k) T) / (4 sqrt(lambda_k))) / lambda_k
/// for the unperturbed wave equation from rest.
inline Vector wave_cov_closed_form(int n_modes, double T, const Vector& q_diag) {
  if (q_diag.size() != n_modes) throw Error(ErrorKind::ShapeMismatch, "wave_cov_closed_form: q_diag size");
  Vector out(n_modes);
  for (int k = 1; k <= n_modes; ++k) {
    const double lam = dirichlet_eigenvalue(k);
    const double w = std::sqrt(lam);
    out[k - 1] = q_diag[k - 1] * (0.5 * T - std::sin(2.0 * w * T) / (4.0 * w)) / lam;
  }
  return out;
}

/// Points and weights for integrating over (0, 1): composite Gauss-Legendre.
struct SampleGrid {
  std::vector<double> points;
  Vector weights;
};

inline SampleGrid composite_grid(int cells, int per_cell) {
  const QuadratureRule unit = gauss_legendre(per_cell, 0.0, 1.0);
  SampleGrid g;
  g.points.reserve(static_cast<std::size_t>(cells) * per_cell);
  g.weights.resize(static_cast<Eigen::Index>(cells) * per_cell);
  for (int c = 0; c < cells; ++c)
    for (int q = 0; q < per_cell; ++q) {
      g.points.push_back((c + unit.nodes[q]) / cells);
      g.weights[c * per_cell + q] = unit.weights[q] / cells;
    }
  return g;
}

/// e_k(x_p) for k = 1..n_modes (points x modes).
inline Matrix eigenfunctions_at(int n_modes, const std::vector<double>& points) {
  Matrix e(static_cast<Eigen::Index>(points.size()), n_modes);
  for (std::size_t p = 0; p < points.size(); ++p)
    for (int k = 1; k <= n_modes; ++k)
      e(static_cast<Eigen::Index>(p), k - 1) = std::sqrt(2.0) * std::sin(k * std::numbers::pi * points[p]);
  return e;
}

/// d/dx e_k(x_p).
inline Matrix eigenfunction_derivatives_at(int n_modes, const std::vector<double>& points) {
  Matrix d(static_cast<Eigen::Index>(points.size()), n_modes);
  for (std::size_t p = 0; p < points.size(); ++p)
    for (int k = 1; k <= n_modes; ++k) {
      const double w = k * std::numbers::pi;
      d(static_cast<Eigen::Index>(p), k - 1) = std::sqrt(2.0) * w * std::cos(w * points[p]);
    }
  return d;
}

inline int oracle_cells(int n_modes) { return std::max(64, 2 * n_modes); }

/// <Q e_k, e_l> for k, l = 1..n_modes.
inline Matrix spectral_noise_gram(int n_modes, const KernelSpec& spec) {
  validate(spec);
  if (std::holds_alternative<WhiteNoise>(spec)) return Matrix::Identity(n_modes, n_modes);
  if (std::holds_alternative<BrownianBridgeKernel>(spec)) {
    Matrix q = Matrix::Zero(n_modes, n_modes);
    for (int k = 1; k <= n_modes; ++k) q(k - 1, k - 1) = 1.0 / dirichlet_eigenvalue(k);
    return q;
  }
  const SampleGrid g = composite_grid(oracle_cells(n_modes), 6);
  const auto np = static_cast<Eigen::Index>(g.points.size());
  Matrix kq(np, np);
  for (Eigen::Index i = 0; i < np; ++i)
    for (Eigen::Index j = i; j < np; ++j)
      kq(i, j) = kq(j, i) = kernel_eval(spec, g.points[i], g.points[j]);
  const Matrix we = g.weights.asDiagonal() * eigenfunctions_at(n_modes, g.points);
  return symmetrized(we.transpose() * kq * we);
}

/// lambda(e_l, e_k) = int a11 e_l' e_k' + a1 e_l' e_k + a0 e_l e_k, stored at (k, l).
inline Matrix spectral_form(int n_modes, const Coefficients& coeffs) {
  const SampleGrid g = composite_grid(oracle_cells(n_modes), 6);
  const Matrix e = eigenfunctions_at(n_modes, g.points);
  const Matrix de = eigenfunction_derivatives_at(n_modes, g.points);
  Vector diff(g.weights.size()), adv(g.weights.size()), react(g.weights.size());
  for (std::size_t p = 0; p < g.points.size(); ++p) {
    const auto i = static_cast<Eigen::Index>(p);
    diff[i] = g.weights[i] * coeffs.a11(g.points[p]);
    adv[i] = g.weights[i] * coeffs.a1(g.points[p]);
    react[i] = g.weights[i] * coeffs.a0(g.points[p]);
  }
  return de.transpose() * diff.asDiagonal() * de + e.transpose() * adv.asDiagonal() * de +
         e.transpose() * react.asDiagonal() * e;
}

namespace detail {

// P with A P + P A^T = C for real A whose spectrum lies in the open right
// half plane (complex Schur + column back substitution).
inline Matrix solve_lyapunov(const Matrix& a, const Matrix& c) {
  using Complex = std::complex<double>;
  using CMatrix = Eigen::MatrixXcd;
  Eigen::ComplexSchur<Matrix> schur(a);
  if (schur.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "lyapunov: Schur failed");
  const CMatrix& t = schur.matrixT();
  const CMatrix& u = schur.matrixU();
  const auto n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(t(i, i).real() > 0.0))
      throw Error(ErrorKind::InvalidArgument, "lyapunov: generator is not strictly stable");
  const CMatrix rhs = u.adjoint() * c.cast<Complex>() * u;
  CMatrix y = CMatrix::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd b = rhs.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) b -= std::conj(t(j, k)) * y.col(k);
    CMatrix shifted = t;
    shifted.diagonal().array() += std::conj(t(j, j));
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(b);
  }
  return symmetrized((u * y * u.adjoint()).real());
}

}  // namespace detail

/// Exact-in-time covariance at T of the Galerkin projection of the
/// advection-diffusion problem dX + Lambda X dt = dW onto the first n_modes
/// eigenfunctions (Dirichlet only). The coercivity shift c0 cancels in the
/// continuous problem and is ignored. Returns eigenbasis coefficients.
inline CovMatrix spectral_galerkin_cov(int n_modes, const AdvDiffConfig& cfg) {
  if (n_modes < 1 || n_modes > 256) throw Error(ErrorKind::InvalidArgument, "n_modes must be in [1, 256]");
  if (cfg.mesh.bc() != BoundaryCondition::Dirichlet)
    throw Error(ErrorKind::InvalidArgument, "spectral oracle needs Dirichlet conditions");
  if (cfg.K0) throw Error(ErrorKind::InvalidArgument, "spectral oracle supports zero initial covariance only");
  const Matrix lam = spectral_form(n_modes, cfg.coeffs);
  const Matrix q = spectral_noise_gram(n_modes, cfg.kernel);
  const Matrix stationary = detail::solve_lyapunov(lam, q);
  const Matrix decay = -cfg.T * lam;
  const Matrix phi = decay.exp();
  return symmetrized(stationary - phi * stationary * phi.transpose());
}

/// Exact-in-time block covariance (2 n_modes) at T of the Galerkin projected
/// wave system du = v dt, dv = (-Lambda u + G u) dt + dW, from rest.
/// Propagation uses Van Loan's block exponential in energy-scaled coordinates.
inline CovMatrix spectral_galerkin_cov(int n_modes, const WaveConfig& cfg) {
  if (n_modes < 1 || n_modes > 256) throw Error(ErrorKind::InvalidArgument, "n_modes must be in [1, 256]");
  if (cfg.K0) throw Error(ErrorKind::InvalidArgument, "spectral oracle supports zero initial covariance only");
  const int n = n_modes;
  const Matrix q = spectral_noise_gram(n, cfg.kernel);
  Matrix g = Matrix::Zero(n, n);
  switch (cfg.g.kind) {
    case GSpec::Kind::MinusQ: g = -q; break;
    case GSpec::Kind::Zero: break;
    case GSpec::Kind::Custom:
      throw Error(ErrorKind::InvalidArgument, "spectral oracle cannot use a custom FEM Gram G_h");
  }
  Vector root(n);
  for (int k = 1; k <= n; ++k) root[k - 1] = std::sqrt(dirichlet_eigenvalue(k));

  // w = [sqrt(Lambda) u; v]:  dw = A w dt + [0; dW].
  Matrix a = Matrix::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n) = root.asDiagonal();
  a.bottomLeftCorner(n, n) = (-root).asDiagonal();
  a.bottomLeftCorner(n, n) += g * root.cwiseInverse().asDiagonal();
  Matrix sigma = Matrix::Zero(2 * n, 2 * n);
  sigma.bottomRightCorner(n, n) = q;

  Matrix vl = Matrix::Zero(4 * n, 4 * n);
  vl.topLeftCorner(2 * n, 2 * n) = -a * cfg.T;
  vl.topRightCorner(2 * n, 2 * n) = sigma * cfg.T;
  vl.bottomRightCorner(2 * n, 2 * n) = a.transpose() * cfg.T;
  const Matrix e = vl.exp();
  const Matrix phi = e.bottomRightCorner(2 * n, 2 * n).transpose();
  const Matrix cov_w = phi * e.topRightCorner(2 * n, 2 * n);

  Vector unscale(2 * n);
  unscale << root.cwiseInverse(), Vector::Ones(n);
  return symmetrized(unscale.asDiagonal() * cov_w * unscale.asDiagonal());
}

/// Covariance function values F(x_p, x_q) of a FEM coefficient matrix.
inline Matrix fem_cov_on_grid(const Mesh1D& mesh, const CovMatrix& k, const SampleGrid& grid) {
  const Matrix b = basis_at(mesh, grid.points);
  return b * k * b.transpose();
}

/// Covariance function values of an eigenbasis coefficient matrix (n x n) .
inline Matrix spectral_cov_on_grid(const CovMatrix& c, const SampleGrid& grid) {
  const Matrix e = eigenfunctions_at(static_cast<int>(c.rows()), grid.points);
  return e * c * e.transpose();
}

/// Weighted L2((0,1)^2) norm of a function sampled on grid x grid.
inline double grid_l2_norm(const Matrix& f, const SampleGrid& grid) {
  const Matrix weighted = grid.weights.asDiagonal() * f.cwiseAbs2() * grid.weights.asDiagonal();
  return std::sqrt(weighted.sum());
}

}  // namespace spde_cov
