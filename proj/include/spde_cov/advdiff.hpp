#pragma once
// Backward-Euler / P1 covariance recursion for the stochastic
// advection-diffusion equation
//     (M + dt A) K_j (M + dt A)^T = (1 + 2 c0 dt) M K_{j-1} M + dt Q_h.

#include <functional>
#include <optional>

#include "spde_cov/error.hpp"
#include "spde_cov/fem1d.hpp"
#include "spde_cov/kernels.hpp"
#include "spde_cov/linalg.hpp"

namespace spde_cov {

/// Covariance coefficient matrix K of sum_{m,n} k_mn phi_m (x) phi_n.
using CovMatrix = Matrix;

struct AdvDiffConfig {
  Mesh1D mesh{2, BoundaryCondition::Neumann};
  Coefficients coeffs;
  double c0 = 0.0;
  KernelSpec kernel = WhiteNoise{};
  std::optional<CovMatrix> K0;  // zero when empty (deterministic initial data)
  double T = 1.0;
  int steps = 1;

  double dt() const { return T / steps; }
};

inline void validate(const AdvDiffConfig& cfg) {
  if (cfg.steps < 1) throw Error(ErrorKind::InvalidArgument, "advdiff: steps must be >= 1");
  if (!(cfg.T > 0.0)) throw Error(ErrorKind::InvalidArgument, "advdiff: T must be positive");
  if (!(cfg.dt() <= 1.0)) throw Error(ErrorKind::InvalidArgument, "advdiff: dt must be <= 1");
  if (cfg.K0 && (cfg.K0->rows() != cfg.mesh.dofs() || cfg.K0->cols() != cfg.mesh.dofs()))
    throw Error(ErrorKind::ShapeMismatch, "advdiff: K0 does not match the mesh");
}

/// One step with freshly factored M + dt A.
inline CovMatrix advdiff_step(const CovMatrix& k_prev, const Matrix& m, const Matrix& a,
                              const Matrix& q_h, double dt, double c0) {
  const auto n = m.rows();
  if (m.cols() != n || a.rows() != n || a.cols() != n || q_h.rows() != n || q_h.cols() != n ||
      k_prev.rows() != n || k_prev.cols() != n)
    throw Error(ErrorKind::ShapeMismatch, "advdiff_step: operand sizes disagree");
  const Matrix rhs = (1.0 + 2.0 * c0 * dt) * m * k_prev * m + dt * q_h;
  return congruence_solve(m + dt * a, symmetrized(rhs));
}

/// Fixed-step propagator: M + dt A is factored once and reused.
/// `growth` multiplies M K M on the right-hand side (1 + 2 c0 dt for the
/// covariance scheme).
class AdvDiffStepper {
 public:
  AdvDiffStepper(const Matrix& m, const Matrix& a, const Matrix& q_h, double dt, double growth)
      : m_(m), noise_(dt * q_h), growth_(growth), lhs_(m + dt * a) {}

  CovMatrix step(const CovMatrix& k_prev) const {
    const Matrix rhs = growth_ * (m_ * k_prev * m_) + noise_;
    return lhs_.congruence(symmetrized(rhs));
  }

 private:
  Matrix m_;
  Matrix noise_;
  double growth_;
  LuFactor lhs_;
};

struct AdvDiffSystem {
  Matrix mass;
  Matrix form;
  Matrix noise;  // Q_h
};

inline AdvDiffSystem assemble_advdiff(const AdvDiffConfig& cfg) {
  return {assemble_mass(cfg.mesh), assemble_form(cfg.mesh, cfg.coeffs, cfg.c0),
          assemble_Q(cfg.mesh, cfg.kernel)};
}

using StepObserver = std::function<void(int step, const CovMatrix& k)>;

/// Runs `steps` (default: all of them) from K0 and returns the final K.
inline CovMatrix advdiff_run(const AdvDiffConfig& cfg, const StepObserver& observer = {},
                             std::optional<int> stop_after = std::nullopt) {
  validate(cfg);
  const AdvDiffSystem sys = assemble_advdiff(cfg);
  const double dt = cfg.dt();
  const AdvDiffStepper stepper(sys.mass, sys.form, sys.noise, dt, 1.0 + 2.0 * cfg.c0 * dt);
  CovMatrix k = cfg.K0 ? *cfg.K0 : CovMatrix::Zero(cfg.mesh.dofs(), cfg.mesh.dofs());
  const int last = stop_after ? std::min(*stop_after, cfg.steps) : cfg.steps;
  if (observer) observer(0, k);
  for (int j = 1; j <= last; ++j) {
    k = stepper.step(k);
    if (observer) observer(j, k);
  }
  return k;
}

}  // namespace spde_cov
