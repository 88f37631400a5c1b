#pragma once
// Path sampling with the same space-time discretizations as the covariance
// recursions, used to cross-check them statistically.
//
// Advection-diffusion paths follow
//     (M + dt A) x_j = (1 + c0 dt) M x_{j-1} + sqrt(dt) chol(Q_h) xi_j,
// whose exact one-step covariance carries (1 + c0 dt)^2 where the
// deterministic recursion has 1 + 2 c0 dt; the c0^2 dt^2 difference is
// reported as `consistency_gap_*`. Wave paths use x_j = T_hat x_{j-1} +
// [0; M^-1 sqrt(dt) chol(Q_h) xi_j], which reproduces the covariance
// recursion exactly.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "spde_cov/advdiff.hpp"
#include "spde_cov/errnorms.hpp"
#include "spde_cov/error.hpp"
#include "spde_cov/linalg.hpp"
#include "spde_cov/parallel.hpp"
#include "spde_cov/wave.hpp"

namespace spde_cov {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Independent generator for path `path` of a run seeded with `seed`.
inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(path + 0x632BE59BD9B4E019ull));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

/// Lower Cholesky factor of a symmetric PSD matrix, retrying with diagonal
/// jitter 0, 1e-14, 1e-12, 1e-10 times trace / N. The zero matrix factors to
/// zero.
inline Matrix cholesky_with_jitter(const Matrix& a) {
  require_square(a, "cholesky_with_jitter");
  const auto n = a.rows();
  if (n == 0 || max_abs(a) == 0.0) return Matrix::Zero(n, n);
  const double scale = std::abs(a.trace()) / static_cast<double>(n);
  for (const double rel : {0.0, 1e-14, 1e-12, 1e-10}) {
    Matrix shifted = symmetrized(a);
    shifted.diagonal().array() += rel * scale;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw Error(ErrorKind::CholeskyFailure, "Cholesky failed with jitter up to 1e-10 * trace / N");
}

namespace detail {

inline Vector standard_normal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi[i] = normal(rng);
  return xi;
}

}  // namespace detail

class AdvDiffPathSampler {
 public:
  explicit AdvDiffPathSampler(const AdvDiffConfig& cfg)
      : steps_(cfg.steps), sys_(assemble_advdiff((validate(cfg), cfg))),
        lhs_(sys_.mass + cfg.dt() * sys_.form), growth_(1.0 + cfg.c0 * cfg.dt()),
        noise_factor_(std::sqrt(cfg.dt()) * cholesky_with_jitter(sys_.noise)) {
    if (cfg.K0) initial_factor_ = cholesky_with_jitter(*cfg.K0);
  }

  Vector sample(std::uint64_t seed, std::uint64_t path) const {
    std::mt19937_64 rng = path_rng(seed, path);
    const auto n = sys_.mass.rows();
    Vector x = initial_factor_ ? Vector(*initial_factor_ * detail::standard_normal(rng, n))
                               : Vector(Vector::Zero(n));
    for (int j = 0; j < steps_; ++j) {
      const Vector rhs = growth_ * (sys_.mass * x) + noise_factor_ * detail::standard_normal(rng, n);
      x = lhs_.solve(rhs);
    }
    return x;
  }

  Eigen::Index dimension() const { return sys_.mass.rows(); }

 private:
  int steps_;
  AdvDiffSystem sys_;
  LuFactor lhs_;
  double growth_;
  Matrix noise_factor_;
  std::optional<Matrix> initial_factor_;
};

class WavePathSampler {
 public:
  explicit WavePathSampler(const WaveConfig& cfg) : steps_(cfg.steps) {
    const WaveSystem sys = assemble_wave(cfg);
    n_ = sys.mass.rows();
    propagator_ = propagator(sys.step);
    noise_map_ = Matrix::Zero(2 * n_, n_);
    noise_map_.bottomRows(n_) =
        std::sqrt(cfg.dt()) * LuFactor(sys.mass).solve(cholesky_with_jitter(sys.noise));
    if (cfg.K0) initial_factor_ = cholesky_with_jitter(*cfg.K0);
  }

  Vector sample(std::uint64_t seed, std::uint64_t path) const {
    std::mt19937_64 rng = path_rng(seed, path);
    Vector x = initial_factor_ ? Vector(*initial_factor_ * detail::standard_normal(rng, 2 * n_))
                               : Vector(Vector::Zero(2 * n_));
    for (int j = 0; j < steps_; ++j)
      x = propagator_ * x + noise_map_ * detail::standard_normal(rng, n_);
    return x;
  }

  Eigen::Index dimension() const { return 2 * n_; }

 private:
  int steps_;
  Eigen::Index n_ = 0;
  Matrix propagator_;
  Matrix noise_map_;
  std::optional<Matrix> initial_factor_;
};

/// Coefficient vector at T of one advection-diffusion path.
inline Vector sample_path_advdiff(const AdvDiffConfig& cfg, std::uint64_t seed, std::uint64_t path = 0) {
  return AdvDiffPathSampler(cfg).sample(seed, path);
}

/// Coefficient vector [u; v] at T of one wave path.
inline Vector sample_path_wave(const WaveConfig& cfg, std::uint64_t seed, std::uint64_t path = 0) {
  return WavePathSampler(cfg).sample(seed, path);
}

/// Unbiased sample covariance (divisor n - 1) of equally sized vectors.
inline CovMatrix empirical_cov(const std::vector<Vector>& samples) {
  if (samples.size() < 2) throw Error(ErrorKind::TooFewSamples, "empirical_cov: need at least 2 samples");
  const auto dim = samples.front().size();
  Vector mean = Vector::Zero(dim);
  for (const auto& s : samples) {
    if (s.size() != dim) throw Error(ErrorKind::ShapeMismatch, "empirical_cov: sample lengths differ");
    mean += s;
  }
  mean /= static_cast<double>(samples.size());
  Matrix acc = Matrix::Zero(dim, dim);
  for (const auto& s : samples) {
    const Vector c = s - mean;
    acc.selfadjointView<Eigen::Lower>().rankUpdate(c);
  }
  acc.triangularView<Eigen::StrictlyUpper>() = acc.transpose();
  return acc / static_cast<double>(samples.size() - 1);
}

struct McConfig {
  std::variant<AdvDiffConfig, WaveConfig> scheme;
  int n_samples = 1000;
  std::uint64_t seed = 0;
  int groups = 20;  // jackknife blocks
};

struct McReport {
  int n_samples = 0;
  double hs_distance = 0.0;
  double trace_distance = 0.0;
  double hs_std_error = 0.0;     // jackknife, HS norm
  double trace_std_error = 0.0;  // jackknife, trace norm
  double consistency_gap_hs = 0.0;
  double consistency_gap_trace = 0.0;
  CovMatrix empirical;
  CovMatrix deterministic;

  /// Distance within three standard errors plus the scheme-consistency gap.
  bool within_band() const {
    return hs_distance <= 3.0 * hs_std_error + consistency_gap_hs;
  }
};

namespace detail {

struct MomentSums {
  Vector first;
  Matrix second;
  long count = 0;
};

inline CovMatrix cov_from_sums(const Vector& s1, const Matrix& s2, long n) {
  const Vector mean = s1 / static_cast<double>(n);
  return symmetrized((s2 - static_cast<double>(n) * mean * mean.transpose()) / static_cast<double>(n - 1));
}

}  // namespace detail

/// Samples paths, compares their empirical covariance with the deterministic
/// recursion in both norms and estimates the sampling error by a grouped
/// jackknife. Wave runs are compared on the position block.
inline McReport mc_validate(const McConfig& cfg) {
  if (cfg.n_samples < 2) throw Error(ErrorKind::TooFewSamples, "mc_validate: need n_samples >= 2");
  const int groups = std::clamp(cfg.groups, 2, cfg.n_samples);

  Mesh1D mesh{2, BoundaryCondition::Dirichlet};
  CovMatrix det, path_exact;
  std::function<Vector(std::uint64_t)> draw;
  Eigen::Index keep = 0;

  if (const auto* ad = std::get_if<AdvDiffConfig>(&cfg.scheme)) {
    mesh = ad->mesh;
    det = advdiff_run(*ad);
    const AdvDiffSystem sys = assemble_advdiff(*ad);
    const double g = 1.0 + ad->c0 * ad->dt();
    const AdvDiffStepper exact(sys.mass, sys.form, sys.noise, ad->dt(), g * g);
    path_exact = ad->K0 ? *ad->K0 : CovMatrix::Zero(mesh.dofs(), mesh.dofs());
    for (int j = 0; j < ad->steps; ++j) path_exact = exact.step(path_exact);
    auto sampler = std::make_shared<AdvDiffPathSampler>(*ad);
    draw = [sampler, seed = cfg.seed](std::uint64_t p) { return sampler->sample(seed, p); };
    keep = mesh.dofs();
  } else {
    const auto& wv = std::get<WaveConfig>(cfg.scheme);
    mesh = wv.mesh;
    det = extract_position_cov(wave_run(wv));
    path_exact = det;
    auto sampler = std::make_shared<WavePathSampler>(wv);
    draw = [sampler, seed = cfg.seed](std::uint64_t p) { return sampler->sample(seed, p); };
    keep = mesh.dofs();
  }

  std::vector<detail::MomentSums> sums(static_cast<std::size_t>(groups));
  parallel_for(sums.size(), [&](std::size_t g) {
    const long begin = static_cast<long>(g) * cfg.n_samples / groups;
    const long end = static_cast<long>(g + 1) * cfg.n_samples / groups;
    detail::MomentSums& s = sums[g];
    s.first = Vector::Zero(keep);
    s.second = Matrix::Zero(keep, keep);
    for (long p = begin; p < end; ++p) {
      const Vector x = draw(static_cast<std::uint64_t>(p)).head(keep);
      s.first += x;
      s.second.selfadjointView<Eigen::Lower>().rankUpdate(x);
      ++s.count;
    }
    s.second.triangularView<Eigen::StrictlyUpper>() = s.second.transpose();
  });

  Vector s1 = Vector::Zero(keep);
  Matrix s2 = Matrix::Zero(keep, keep);
  long total = 0;
  for (const auto& s : sums) {
    s1 += s.first;
    s2 += s.second;
    total += s.count;
  }

  McReport report;
  report.n_samples = cfg.n_samples;
  report.empirical = detail::cov_from_sums(s1, s2, total);
  report.deterministic = det;
  report.hs_distance = err_hs_norm(report.empirical, mesh, det, mesh);
  report.trace_distance = err_trace_norm(report.empirical, mesh, det, mesh);
  report.consistency_gap_hs = err_hs_norm(path_exact, mesh, det, mesh);
  report.consistency_gap_trace = err_trace_norm(path_exact, mesh, det, mesh);

  std::vector<CovMatrix> loo;
  loo.reserve(sums.size());
  CovMatrix loo_mean = CovMatrix::Zero(keep, keep);
  for (const auto& s : sums) {
    loo.push_back(detail::cov_from_sums(s1 - s.first, s2 - s.second, total - s.count));
    loo_mean += loo.back();
  }
  loo_mean /= static_cast<double>(groups);
  double ss_hs = 0.0, ss_tr = 0.0;
  for (const auto& c : loo) {
    ss_hs += std::pow(err_hs_norm(c, mesh, loo_mean, mesh), 2);
    ss_tr += std::pow(err_trace_norm(c, mesh, loo_mean, mesh), 2);
  }
  const double factor = (groups - 1.0) / groups;
  report.hs_std_error = std::sqrt(factor * ss_hs);
  report.trace_std_error = std::sqrt(factor * ss_tr);
  return report;
}

}  // namespace spde_cov
