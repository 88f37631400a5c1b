#pragma once
// Crank-Nicolson / P1 covariance recursion for the stochastic wave equation
//     dU' - U'' dt = G U dt + dW
// on the Dirichlet interval, state X = [U, U'] in coefficient form
// x = [u; v] (2N unknowns).
//
// A linear map with coefficient action x -> T x transforms a covariance
// coefficient matrix by K -> T K T^T. One step is
//     K_j = T_hat K_{j-1} T_hat^T + dt blockdiag(0, M^-1 Q_h M^-1),
//     T_hat = L^-1 R P,
// with L, R the weak-form Crank-Nicolson blocks and P = I + dt F the
// perturbation (applied first).

#include <cmath>
#include <optional>

#include "spde_cov/advdiff.hpp"
#include "spde_cov/error.hpp"
#include "spde_cov/fem1d.hpp"
#include "spde_cov/kernels.hpp"
#include "spde_cov/linalg.hpp"

namespace spde_cov {

struct GSpec {
  enum class Kind { MinusQ, Zero, Custom };
  Kind kind = Kind::MinusQ;
  Matrix custom;  // Gram form G_h(i, j) = <G phi_j, phi_i> when kind == Custom
};

struct WaveConfig {
  Mesh1D mesh{2, BoundaryCondition::Dirichlet};
  KernelSpec kernel = WhiteNoise{};
  GSpec g;
  std::optional<CovMatrix> K0;  // 2N x 2N, zero when empty
  double T = 1.0;
  int steps = 1;

  double dt() const { return T / steps; }
};

inline void validate(const WaveConfig& cfg) {
  if (cfg.mesh.bc() != BoundaryCondition::Dirichlet)
    throw Error(ErrorKind::InvalidArgument, "wave: mesh must use Dirichlet conditions");
  if (cfg.steps < 1) throw Error(ErrorKind::InvalidArgument, "wave: steps must be >= 1");
  if (!(cfg.T > 0.0)) throw Error(ErrorKind::InvalidArgument, "wave: T must be positive");
  if (!(cfg.dt() <= 1.0)) throw Error(ErrorKind::InvalidArgument, "wave: dt must be <= 1");
  const int n = cfg.mesh.dofs();
  if (cfg.K0 && (cfg.K0->rows() != 2 * n || cfg.K0->cols() != 2 * n))
    throw Error(ErrorKind::ShapeMismatch, "wave: K0 must be 2N x 2N");
  if (cfg.g.kind == GSpec::Kind::Custom && (cfg.g.custom.rows() != n || cfg.g.custom.cols() != n))
    throw Error(ErrorKind::ShapeMismatch, "wave: custom G_h must be N x N");
}

struct BlockStep {
  Matrix L;
  Matrix R;
  Matrix P;
};

/// L = [[M, -dt/2 M], [dt/2 S, M]], R = [[M, dt/2 M], [-dt/2 S, M]], P = I.
inline BlockStep build_cn_blocks(const Matrix& m, const Matrix& s, double dt) {
  const auto n = m.rows();
  if (m.cols() != n || s.rows() != n || s.cols() != n)
    throw Error(ErrorKind::ShapeMismatch, "build_cn_blocks: M and S must be N x N");
  BlockStep step;
  step.L.resize(2 * n, 2 * n);
  step.R.resize(2 * n, 2 * n);
  step.L << m, -0.5 * dt * m, 0.5 * dt * s, m;
  step.R << m, 0.5 * dt * m, -0.5 * dt * s, m;
  step.P = Matrix::Identity(2 * n, 2 * n);
  return step;
}

/// Coefficient action of I + dt F with F[u; v] = [0; G u]:
/// P = [[I, 0], [dt M^-1 G_h, I]].
inline Matrix build_perturbation(const Matrix& g_h, const Matrix& m, double dt) {
  const auto n = m.rows();
  if (m.cols() != n || g_h.rows() != n || g_h.cols() != n)
    throw Error(ErrorKind::ShapeMismatch, "build_perturbation: G_h and M must be N x N");
  Matrix p = Matrix::Identity(2 * n, 2 * n);
  if (dt != 0.0) p.bottomLeftCorner(n, n) = dt * LuFactor(m).solve(g_h);
  return p;
}

/// T_hat = L^-1 R P.
inline Matrix propagator(const BlockStep& step) {
  return LuFactor(step.L).solve(step.R * step.P);
}

/// det(L^-1 R) via log-determinants of the LU factors.
inline double cn_determinant(const BlockStep& step) {
  auto log_det = [](const Matrix& a, int& sign) {
    Eigen::PartialPivLU<Matrix> lu(a);
    double acc = 0.0;
    sign = lu.permutationP().determinant();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double d = lu.matrixLU()(i, i);
      if (d < 0) sign = -sign;
      acc += std::log(std::abs(d));
    }
    return acc;
  };
  int sl = 1, sr = 1;
  const double ll = log_det(step.L, sl);
  const double lr = log_det(step.R, sr);
  return sl * sr * std::exp(lr - ll);
}

/// dt blockdiag(0, M^-1 Q_h M^-1).
inline Matrix wave_noise_block(const Matrix& q_h, const Matrix& m, double dt) {
  const auto n = m.rows();
  const LuFactor mass(m);
  Matrix out = Matrix::Zero(2 * n, 2 * n);
  out.bottomRightCorner(n, n) = dt * mass.congruence(q_h);
  return out;
}

inline CovMatrix wave_cov_step(const CovMatrix& k_prev, const BlockStep& step, const Matrix& q_h,
                               const Matrix& m, double dt) {
  const auto n2 = step.L.rows();
  if (k_prev.rows() != n2 || k_prev.cols() != n2 || q_h.rows() * 2 != n2 || m.rows() * 2 != n2)
    throw Error(ErrorKind::ShapeMismatch, "wave_cov_step: operand sizes disagree");
  const Matrix t = propagator(step);
  return symmetrized(t * k_prev * t.transpose() + wave_noise_block(q_h, m, dt));
}

inline CovMatrix extract_position_cov(const CovMatrix& k) {
  if (k.rows() != k.cols() || k.rows() % 2 != 0)
    throw Error(ErrorKind::ShapeMismatch, "extract_position_cov: need a square 2N x 2N matrix");
  const auto n = k.rows() / 2;
  return k.topLeftCorner(n, n);
}

class WaveStepper {
 public:
  WaveStepper(const Matrix& t_hat, const Matrix& noise) : t_(t_hat), noise_(noise) {}

  CovMatrix step(const CovMatrix& k_prev) const {
    return symmetrized(t_ * k_prev * t_.transpose() + noise_);
  }
  const Matrix& propagator() const { return t_; }

 private:
  Matrix t_;
  Matrix noise_;
};

struct WaveSystem {
  Matrix mass;
  Matrix stiffness;
  Matrix noise;  // Q_h
  Matrix g;      // G_h
  BlockStep step;
};

inline WaveSystem assemble_wave(const WaveConfig& cfg) {
  validate(cfg);
  WaveSystem sys;
  sys.mass = assemble_mass(cfg.mesh);
  sys.stiffness = assemble_laplacian(cfg.mesh);
  sys.noise = assemble_Q(cfg.mesh, cfg.kernel);
  switch (cfg.g.kind) {
    case GSpec::Kind::MinusQ: sys.g = -sys.noise; break;
    case GSpec::Kind::Zero: sys.g = Matrix::Zero(cfg.mesh.dofs(), cfg.mesh.dofs()); break;
    case GSpec::Kind::Custom: sys.g = cfg.g.custom; break;
  }
  sys.step = build_cn_blocks(sys.mass, sys.stiffness, cfg.dt());
  sys.step.P = build_perturbation(sys.g, sys.mass, cfg.dt());
  return sys;
}

inline CovMatrix wave_run(const WaveConfig& cfg, const StepObserver& observer = {},
                          std::optional<int> stop_after = std::nullopt) {
  const WaveSystem sys = assemble_wave(cfg);
  const WaveStepper stepper(propagator(sys.step), wave_noise_block(sys.noise, sys.mass, cfg.dt()));
  const int n2 = 2 * cfg.mesh.dofs();
  CovMatrix k = cfg.K0 ? *cfg.K0 : CovMatrix::Zero(n2, n2);
  const int last = stop_after ? std::min(*stop_after, cfg.steps) : cfg.steps;
  if (observer) observer(0, k);
  for (int j = 1; j <= last; ++j) {
    k = stepper.step(k);
    if (observer) observer(j, k);
  }
  return k;
}

}  // namespace spde_cov
