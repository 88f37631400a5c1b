#pragma once
// Piecewise-linear finite elements on uniform partitions of (0, 1).
//
// Index convention used throughout the library: for a bilinear form a(u, v)
// with trial u and test v, the assembled matrix has entries
//     A(i, j) = a(phi_j, phi_i)
// (row = test function, column = trial function). The semidiscrete system is
// then M x' + A x = load, and covariance coefficient matrices propagate as
// (M + dt A) K (M + dt A)^T.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "spde_cov/error.hpp"
#include "spde_cov/linalg.hpp"
#include "spde_cov/quadrature.hpp"

namespace spde_cov {

enum class BoundaryCondition { Dirichlet, Neumann };

inline std::string_view to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::Dirichlet ? "dirichlet" : "neumann";
}

/// Uniform mesh of (0, 1). Dirichlet boundary nodes are eliminated, so DoF k
/// sits at node k + 1; with Neumann conditions DoF k sits at node k.
class Mesh1D {
 public:
  Mesh1D(int n_cells, BoundaryCondition bc) : n_cells_(n_cells), bc_(bc) {
    if (n_cells < 2)
      throw Error(ErrorKind::InvalidArgument, "Mesh1D: need at least 2 cells, got " + std::to_string(n_cells));
  }

  int n_cells() const { return n_cells_; }
  double h() const { return 1.0 / n_cells_; }
  BoundaryCondition bc() const { return bc_; }
  int dofs() const { return bc_ == BoundaryCondition::Dirichlet ? n_cells_ - 1 : n_cells_ + 1; }

  /// DoF index of mesh node `node`, or -1 for an eliminated boundary node.
  int dof_of_node(int node) const {
    if (bc_ == BoundaryCondition::Neumann) return node;
    return (node == 0 || node == n_cells_) ? -1 : node - 1;
  }
  int node_of_dof(int dof) const { return bc_ == BoundaryCondition::Dirichlet ? dof + 1 : dof; }
  double dof_coordinate(int dof) const { return node_of_dof(dof) * h(); }

  /// Cell containing x (right-closed at x = 1).
  int cell_of(double x) const {
    const int c = static_cast<int>(std::floor(x * n_cells_));
    return std::clamp(c, 0, n_cells_ - 1);
  }

  bool operator==(const Mesh1D&) const = default;

 private:
  int n_cells_;
  BoundaryCondition bc_;
};

/// Coefficients of -(a11 u')' + a1 u' + a0 u. `lambda0` is the caller's lower
/// bound on a11.
struct Coefficients {
  std::function<double(double)> a11 = [](double) { return 1.0; };
  std::function<double(double)> a1 = [](double) { return 0.0; };
  std::function<double(double)> a0 = [](double) { return 0.0; };
  double lambda0 = 1.0;
};

namespace detail {

// Values of the two hat functions living on `cell` at x, local order
// (left node, right node).
inline std::array<double, 2> local_hats(const Mesh1D& mesh, int cell, double x) {
  const double t = x * mesh.n_cells() - cell;
  return {1.0 - t, t};
}

template <typename LocalFn>
void assemble_cells(const Mesh1D& mesh, Matrix& out, LocalFn&& local) {
  out = Matrix::Zero(mesh.dofs(), mesh.dofs());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const std::array<double, 4> loc = local(c);
    const std::array<int, 2> dof = {mesh.dof_of_node(c), mesh.dof_of_node(c + 1)};
    for (int i = 0; i < 2; ++i) {
      if (dof[i] < 0) continue;
      for (int j = 0; j < 2; ++j) {
        if (dof[j] < 0) continue;
        out(dof[i], dof[j]) += loc[2 * i + j];
      }
    }
  }
}

}  // namespace detail

/// Gram matrix of the hat basis.
inline Matrix assemble_mass(const Mesh1D& mesh) {
  const double h = mesh.h();
  Matrix m;
  detail::assemble_cells(mesh, m, [h](int) {
    return std::array<double, 4>{h / 3.0, h / 6.0, h / 6.0, h / 3.0};
  });
  return m;
}

/// Dirichlet-Laplacian stiffness S(i, j) = <phi_i', phi_j'>.
inline Matrix assemble_laplacian(const Mesh1D& mesh) {
  const double inv_h = 1.0 / mesh.h();
  Matrix s;
  detail::assemble_cells(mesh, s, [inv_h](int) {
    return std::array<double, 4>{inv_h, -inv_h, -inv_h, inv_h};
  });
  return s;
}

/// Matrix of a(u, v) = int a11 u'v' + a1 u' v + a0 u v dx + c0 <u, v>, with
/// A(i, j) = a(phi_j, phi_i). Eight Gauss points per cell.
inline Matrix assemble_form(const Mesh1D& mesh, const Coefficients& coeffs, double c0) {
  const QuadratureRule ref = gauss_legendre(8);
  const double h = mesh.h();
  const std::array<double, 2> slope = {-1.0 / h, 1.0 / h};
  Matrix a;
  detail::assemble_cells(mesh, a, [&](int c) {
    std::array<double, 4> loc{};
    const double left = c * h;
    for (std::size_t q = 0; q < ref.nodes.size(); ++q) {
      const double x = left + 0.5 * h * (ref.nodes[q] + 1.0);
      const double w = 0.5 * h * ref.weights[q];
      const double diff = coeffs.a11(x);
      if (!(diff >= coeffs.lambda0))
        throw Error(ErrorKind::EllipticityViolated,
                    "a11(" + std::to_string(x) + ") = " + std::to_string(diff) + " < lambda0");
      const double adv = coeffs.a1(x);
      const double react = coeffs.a0(x) + c0;
      const auto phi = detail::local_hats(mesh, c, x);
      for (int i = 0; i < 2; ++i)      // test
        for (int j = 0; j < 2; ++j)    // trial
          loc[2 * i + j] += w * (diff * slope[j] * slope[i] + adv * slope[j] * phi[i] +
                                 react * phi[j] * phi[i]);
    }
    return loc;
  });
  return a;
}

/// Gram matrix <phi^row_i, phi^col_j> between the hat bases of two uniform
/// meshes, integrated exactly on the merged breakpoint set.
inline Matrix cross_mass(const Mesh1D& rows, const Mesh1D& cols) {
  if (rows.bc() != cols.bc())
    throw Error(ErrorKind::MismatchedBC, "cross_mass: meshes use different boundary conditions");

  std::vector<double> breaks;
  breaks.reserve(rows.n_cells() + cols.n_cells() + 2);
  for (int k = 0; k <= rows.n_cells(); ++k) breaks.push_back(static_cast<double>(k) / rows.n_cells());
  for (int k = 0; k <= cols.n_cells(); ++k) breaks.push_back(static_cast<double>(k) / cols.n_cells());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-14; }),
               breaks.end());

  const QuadratureRule ref = gauss_legendre(2);  // exact for products of linears
  Matrix out = Matrix::Zero(rows.dofs(), cols.dofs());
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double lo = breaks[s], hi = breaks[s + 1];
    const double mid = 0.5 * (lo + hi);
    const int cr = rows.cell_of(mid), cc = cols.cell_of(mid);
    const std::array<int, 2> dr = {rows.dof_of_node(cr), rows.dof_of_node(cr + 1)};
    const std::array<int, 2> dc = {cols.dof_of_node(cc), cols.dof_of_node(cc + 1)};
    for (std::size_t q = 0; q < ref.nodes.size(); ++q) {
      const double x = mid + 0.5 * (hi - lo) * ref.nodes[q];
      const double w = 0.5 * (hi - lo) * ref.weights[q];
      const auto pr = detail::local_hats(rows, cr, x);
      const auto pc = detail::local_hats(cols, cc, x);
      for (int i = 0; i < 2; ++i) {
        if (dr[i] < 0) continue;
        for (int j = 0; j < 2; ++j) {
          if (dc[j] < 0) continue;
          out(dr[i], dc[j]) += w * pr[i] * pc[j];
        }
      }
    }
  }
  return out;
}

/// Coercivity shift sup|a1| / (4 lambda0 eps) - inf a0, extrema sampled on
/// 1001 equispaced points of [0, 1].
inline double compute_c0(const Coefficients& coeffs, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw Error(ErrorKind::InvalidArgument, "compute_c0: epsilon must lie in (0, 1)");
  double sup_adv = 0.0;
  double inf_react = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 1000; ++k) {
    const double x = k / 1000.0;
    sup_adv = std::max(sup_adv, std::abs(coeffs.a1(x)));
    inf_react = std::min(inf_react, coeffs.a0(x));
  }
  return sup_adv / (4.0 * coeffs.lambda0 * epsilon) - inf_react;
}

/// Values of all basis functions at the given points (points x dofs).
inline Matrix basis_at(const Mesh1D& mesh, const std::vector<double>& points) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(points.size()), mesh.dofs());
  for (std::size_t p = 0; p < points.size(); ++p) {
    const int c = mesh.cell_of(points[p]);
    const auto phi = detail::local_hats(mesh, c, points[p]);
    const std::array<int, 2> dof = {mesh.dof_of_node(c), mesh.dof_of_node(c + 1)};
    for (int i = 0; i < 2; ++i)
      if (dof[i] >= 0) out(static_cast<Eigen::Index>(p), dof[i]) += phi[i];
  }
  return out;
}

}  // namespace spde_cov
