#pragma once

// Brute-force reference computations used only by the tests. They evaluate
// hat functions from their closed form and integrate with composite
// midpoint-free Gauss rules, sharing no code paths with the library
// assembly.

#include <cmath>
#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Hat function centred at node `node` of a uniform mesh with `cells` cells.
inline double hat(int cells, int node, double x) {
  const double h = 1.0 / cells;
  return std::max(0.0, 1.0 - std::abs(x - node * h) / h);
}

inline double hat_slope(int cells, int node, double x) {
  const double h = 1.0 / cells, c = node * h;
  if (x <= c - h || x >= c + h) return 0.0;
  return x < c ? 1.0 / h : -1.0 / h;
}

// Nodes carrying a degree of freedom, in dof order.
inline std::vector<int> dof_nodes(int cells, bool dirichlet) {
  std::vector<int> out;
  for (int k = dirichlet ? 1 : 0; k <= (dirichlet ? cells - 1 : cells); ++k) out.push_back(k);
  return out;
}

// Composite Gauss-Legendre nodes and weights with `per` points on each of
// `pieces` equal sub-intervals of (0, 1). Nodes come from Golub-Welsch.
struct Rule {
  std::vector<double> x, w;
};

inline Rule composite(int pieces, int per) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(per, per);
  for (int k = 1; k < per; ++k) j(k, k - 1) = j(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  Rule r;
  for (int p = 0; p < pieces; ++p) {
    const double a = static_cast<double>(p) / pieces, b = static_cast<double>(p + 1) / pieces;
    for (int k = 0; k < per; ++k) {
      const double t = es.eigenvalues()[k];
      const double w = 2.0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
      r.x.push_back(0.5 * (a + b) + 0.5 * (b - a) * t);
      r.w.push_back(0.5 * (b - a) * w);
    }
  }
  return r;
}

}  // namespace oracle

namespace oracle {

// Gauss rule with `per` points mapped to [a, b].
inline Rule on_interval(double a, double b, int per) {
  Rule unit = composite(1, per);
  for (std::size_t k = 0; k < unit.x.size(); ++k) {
    unit.x[k] = a + (b - a) * unit.x[k];
    unit.w[k] *= (b - a);
  }
  return unit;
}

// <Q phi_i, phi_j> by iterated integration. The inner integral is split at
// the mesh breakpoints and at y = x, so every piece has a smooth integrand.
inline Eigen::MatrixXd kernel_gram(int cells, bool dirichlet, const std::function<double(double, double)>& q,
                                   int per = 200) {
  const auto nodes = dof_nodes(cells, dirichlet);
  const auto n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const Rule outer = composite(cells, per);
  std::vector<double> breaks;
  for (int k = 0; k <= cells; ++k) breaks.push_back(static_cast<double>(k) / cells);
  const Rule unit = composite(1, per);
  for (std::size_t p = 0; p < outer.x.size(); ++p) {
    const double x = outer.x[p];
    std::vector<double> cuts = breaks;
    cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    Eigen::VectorXd inner = Eigen::VectorXd::Zero(n);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double a = cuts[c], b = cuts[c + 1];
      if (b - a < 1e-15) continue;
      for (std::size_t k = 0; k < unit.x.size(); ++k) {
        const double y = a + (b - a) * unit.x[k];
        const double w = (b - a) * unit.w[k] * q(x, y);
        for (Eigen::Index j = 0; j < n; ++j) inner[j] += w * hat(cells, nodes[j], y);
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) out.row(i) += outer.w[p] * hat(cells, nodes[i], x) * inner.transpose();
  }
  return out;
}

}  // namespace oracle

namespace oracle {

// Values of all hat functions of a mesh at the rule's points (points x dofs).
inline Eigen::MatrixXd hat_values(int cells, bool dirichlet, const std::vector<double>& x) {
  const auto nodes = dof_nodes(cells, dirichlet);
  Eigen::MatrixXd b(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t p = 0; p < x.size(); ++p)
    for (std::size_t i = 0; i < nodes.size(); ++i) b(p, i) = hat(cells, nodes[i], x[p]);
  return b;
}

// Kernel of sum k_mn phi_m (x) phi_n - sum r_mn psi_m (x) psi_n sampled on a
// Gauss grid aligned with both meshes. Products of hats are exact there, so
// the Nystrom matrix sqrt(W) F sqrt(W) has the operator's nonzero spectrum.
inline Eigen::MatrixXd nystrom_difference(const Eigen::MatrixXd& k, int cells, const Eigen::MatrixXd& r,
                                          int cells_ref, bool dirichlet, Eigen::VectorXd& sqrt_w) {
  const int pieces = std::lcm(cells, cells_ref);
  const Rule rule = composite(pieces, 3);
  const Eigen::MatrixXd b = hat_values(cells, dirichlet, rule.x);
  const Eigen::MatrixXd c = hat_values(cells_ref, dirichlet, rule.x);
  sqrt_w = Eigen::Map<const Eigen::VectorXd>(rule.w.data(), static_cast<Eigen::Index>(rule.w.size())).cwiseSqrt();
  const Eigen::MatrixXd f = b * k * b.transpose() - c * r * c.transpose();
  return sqrt_w.asDiagonal() * f * sqrt_w.asDiagonal();
}

inline double trace_norm(const Eigen::MatrixXd& k, int cells, const Eigen::MatrixXd& r, int cells_ref,
                         bool dirichlet) {
  Eigen::VectorXd sw;
  const Eigen::MatrixXd a = nystrom_difference(k, cells, r, cells_ref, dirichlet, sw);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  return es.eigenvalues().cwiseAbs().sum();
}

inline double hs_norm(const Eigen::MatrixXd& k, int cells, const Eigen::MatrixXd& r, int cells_ref,
                      bool dirichlet) {
  Eigen::VectorXd sw;
  return nystrom_difference(k, cells, r, cells_ref, dirichlet, sw).norm();
}

}  // namespace oracle
