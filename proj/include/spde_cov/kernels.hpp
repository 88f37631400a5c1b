#pragma once
// Covariance operators of the driving noise and their Gram matrices
// Q_h(i, j) = <Q phi_i, phi_j>.

#include <cmath>
#include <functional>
#include <string>
#include <type_traits>
#include <variant>

#include "spde_cov/error.hpp"
#include "spde_cov/fem1d.hpp"
#include "spde_cov/linalg.hpp"
#include "spde_cov/quadrature.hpp"

namespace spde_cov {

/// Q = I. Has no pointwise kernel.
struct WhiteNoise {};

/// q(x, y) = exp(-scale |x - y|).
struct ExponentialKernel {
  double scale = 1.0;
};

/// Matern covariance with variance sigma^2, smoothness nu and length rho:
/// q(z) = sigma^2 2^(1-nu) / Gamma(nu) s^nu K_nu(s), s = sqrt(2 nu) z / rho.
struct MaternKernel {
  double sigma = 1.0;
  double nu = 0.5;
  double rho = 1.0;
};

/// q(x, y) = min(x, y) - x y, the inverse Dirichlet Laplacian on (0, 1).
struct BrownianBridgeKernel {};

struct CustomKernel {
  std::function<double(double, double)> q;
};

using KernelSpec =
    std::variant<WhiteNoise, ExponentialKernel, MaternKernel, BrownianBridgeKernel, CustomKernel>;

inline void validate(const KernelSpec& spec) {
  if (const auto* e = std::get_if<ExponentialKernel>(&spec); e && !(e->scale > 0.0))
    throw Error(ErrorKind::InvalidArgument, "exponential kernel: scale must be positive");
  if (const auto* m = std::get_if<MaternKernel>(&spec);
      m && !(m->sigma > 0.0 && m->nu > 0.0 && m->rho > 0.0))
    throw Error(ErrorKind::InvalidArgument, "matern kernel: sigma, nu, rho must be positive");
  if (const auto* c = std::get_if<CustomKernel>(&spec); c && !c->q)
    throw Error(ErrorKind::InvalidArgument, "custom kernel: empty function");
}

inline double matern(const MaternKernel& m, double z) {
  z = std::abs(z);
  const double var = m.sigma * m.sigma;
  if (z == 0.0) return var;
  const double s = std::sqrt(2.0 * m.nu) * z / m.rho;
  if (s > 700.0) return 0.0;
  return var * std::pow(2.0, 1.0 - m.nu) / std::tgamma(m.nu) * std::pow(s, m.nu) *
         std::cyl_bessel_k(m.nu, s);
}

inline double kernel_eval(const KernelSpec& spec, double x, double y) {
  return std::visit(
      [x, y](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, WhiteNoise>) {
          throw Error(ErrorKind::NoPointwiseKernel, "white noise has no pointwise kernel");
        } else if constexpr (std::is_same_v<K, ExponentialKernel>) {
          return std::exp(-k.scale * std::abs(x - y));
        } else if constexpr (std::is_same_v<K, MaternKernel>) {
          return matern(k, x - y);
        } else if constexpr (std::is_same_v<K, BrownianBridgeKernel>) {
          return std::min(x, y) - x * y;
        } else {
          return k.q(x, y);
        }
      },
      spec);
}

/// Gram matrix <Q phi_i, phi_j>. Off-diagonal cell pairs use a 6x6 tensor
/// Gauss rule; a diagonal cell pair is split along x = y into two triangles,
/// each integrated with a 6x6 Duffy-collapsed rule, so kernels with a kink on
/// the diagonal stay smooth inside every integration patch. Matern kernels
/// behave like |z|^(2 nu) near the diagonal; for them the collapsed
/// coordinate is graded as t = u^2. Kernels are assumed symmetric.
inline Matrix assemble_Q(const Mesh1D& mesh, const KernelSpec& spec) {
  validate(spec);
  if (std::holds_alternative<WhiteNoise>(spec)) return assemble_mass(mesh);

  constexpr int kPts = 6;
  const bool graded = std::holds_alternative<MaternKernel>(spec);
  const QuadratureRule unit = gauss_legendre(kPts, 0.0, 1.0);
  const int n = mesh.n_cells();
  const double h = mesh.h();

  Matrix q = Matrix::Zero(mesh.dofs(), mesh.dofs());
  auto scatter = [&](int ca, int cb, const double (&loc)[2][2]) {
    const int da[2] = {mesh.dof_of_node(ca), mesh.dof_of_node(ca + 1)};
    const int db[2] = {mesh.dof_of_node(cb), mesh.dof_of_node(cb + 1)};
    for (int i = 0; i < 2; ++i) {
      if (da[i] < 0) continue;
      for (int j = 0; j < 2; ++j) {
        if (db[j] < 0) continue;
        q(da[i], db[j]) += loc[i][j];
        if (ca != cb) q(db[j], da[i]) += loc[i][j];
      }
    }
  };

  for (int ca = 0; ca < n; ++ca) {
    const double left_a = ca * h;
    // Diagonal pair: T(i, j) = int_cell int_{left}^{x} q(x, y) phi_i(x) phi_j(y),
    // with x = left + h s, y = x - h s t; the pair integral is T + T^T.
    {
      double tri[2][2] = {};
      for (int p = 0; p < kPts; ++p) {
        const double s = unit.nodes[p];
        const double x = left_a + h * s;
        for (int r = 0; r < kPts; ++r) {
          const double u = unit.nodes[r];
          const double t = graded ? u * u : u;
          const double y = x - h * s * t;
          const double w = unit.weights[p] * unit.weights[r] * h * h * s * (graded ? 2.0 * u : 1.0);
          const double kv = kernel_eval(spec, x, y);
          const double px[2] = {1.0 - (x - left_a) / h, (x - left_a) / h};
          const double py[2] = {1.0 - (y - left_a) / h, (y - left_a) / h};
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) tri[i][j] += w * kv * px[i] * py[j];
        }
      }
      double loc[2][2];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) loc[i][j] = tri[i][j] + tri[j][i];
      scatter(ca, ca, loc);
    }
    for (int cb = ca + 1; cb < n; ++cb) {
      const double left_b = cb * h;
      double loc[2][2] = {};
      for (int p = 0; p < kPts; ++p) {
        const double x = left_a + h * unit.nodes[p];
        const double px[2] = {1.0 - unit.nodes[p], unit.nodes[p]};
        for (int r = 0; r < kPts; ++r) {
          const double y = left_b + h * unit.nodes[r];
          const double py[2] = {1.0 - unit.nodes[r], unit.nodes[r]};
          const double w = unit.weights[p] * unit.weights[r] * h * h;
          const double kv = kernel_eval(spec, x, y);
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) loc[i][j] += w * kv * px[i] * py[j];
        }
      }
      scatter(ca, cb, loc);
    }
  }
  return symmetrized(q);
}

}  // namespace spde_cov
