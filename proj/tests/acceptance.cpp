// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "spde_cov/spde_cov.hpp"

using namespace spde_cov;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void note(Outcome& o, bool ok, const std::string& what) {
  if (!ok) o.pass = false;
  o.detail += (o.detail.empty() ? "" : "; ") + what + (ok ? "" : " [x]");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

bool within(double v, double want, double tol) { return std::isfinite(v) && std::abs(v - want) <= tol; }

// Invariants collected across criteria 1-4 and reported as criterion 7.
struct InvariantLog {
  int checked = 0;
  std::vector<std::string> failures;
  void fail(const std::string& what) { failures.push_back(what); }
};

InvariantLog g_invariants;

void check_solution(const std::string& tag, const LevelSolution& sol) {
  ++g_invariants.checked;
  const Matrix m = assemble_mass(sol.mesh);
  const double asym = max_abs(sol.k - sol.k.transpose());
  if (asym > 1e-12 * std::max(1.0, max_abs(sol.k))) g_invariants.fail(tag + " symmetry " + num(asym));
  const double lo = min_relative_eigenvalue(sol.k, m);
  if (lo < -1e-8) g_invariants.fail(tag + " PSD " + num(lo));
}

void check_report(const std::string& tag, const RateReport& r) {
  for (const auto& row : r.rows)
    if (std::isfinite(row.err_l1) && row.err_l2 > row.err_l1 * (1.0 + 1e-12))
      g_invariants.fail(tag + " Schatten ordering at level " + std::to_string(row.level));
}

void check_wave_level(const std::string& tag, const StudyConfig& s, const Level& l) {
  const WaveConfig cfg = wave_config(s, l);
  const WaveSystem sys = assemble_wave(cfg);
  const double det = cn_determinant(build_cn_blocks(sys.mass, sys.stiffness, cfg.dt()));
  if (std::abs(det - 1.0) > 1e-8) g_invariants.fail(tag + " CN det " + num(det));
  // Noiseless, unperturbed run: the discrete energy is conserved.
  const Matrix t = propagator(build_cn_blocks(sys.mass, sys.stiffness, cfg.dt()));
  const auto n = sys.mass.rows();
  Vector x(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = cfg.mesh.dof_coordinate(static_cast<int>(i));
    x[i] = std::sin(std::numbers::pi * xi) + xi * (1.0 - xi);
    x[n + i] = std::cos(3.0 * xi);
  }
  auto energy = [&](const Vector& y) {
    return y.head(n).dot(sys.stiffness * y.head(n)) + y.tail(n).dot(sys.mass * y.tail(n));
  };
  const double e0 = energy(x);
  for (int j = 0; j < 1000; ++j) x = t * x;
  const double drift = std::abs(energy(x) / e0 - 1.0);
  if (drift > 1e-6) g_invariants.fail(tag + " energy drift " + num(drift));
}

RateReport sweep_with_invariants(const std::string& tag, const StudyConfig& s) {
  const RateReport r = run_sweep(s, [&](std::size_t i, const LevelSolution& sol) {
    check_solution(tag + " level " + std::to_string(i), sol);
  });
  check_report(tag, r);
  if (s.equation == Equation::Wave) {
    for (const Level& l : s.levels) check_wave_level(tag, s, l);
    check_wave_level(tag, s, s.reference);
  }
  return r;
}

void print_rows(const RateReport& r) {
  for (const auto& row : r.rows)
    std::cout << "    h=" << num(row.h) << " dt=" << num(row.dt) << " L1=" << num(row.err_l1)
              << " L2=" << num(row.err_l2) << " t=" << num(row.wall_time_s) << "s\n";
}

Coefficients advection_coeffs() {
  Coefficients c;
  c.a11 = [](double) { return 4.0; };
  c.a1 = [](double x) { return std::sin(2.0 * std::numbers::pi * x); };
  c.a0 = [](double) { return 0.0; };
  c.lambda0 = 4.0;
  return c;
}

StudyConfig advdiff_study(KernelSpec kernel) {
  StudyConfig s;
  s.equation = Equation::AdvDiff;
  s.bc = BoundaryCondition::Neumann;
  s.coeffs = advection_coeffs();
  s.c0 = 0.125;
  s.kernel = std::move(kernel);
  for (int l = 1; l <= 6; ++l) s.levels.push_back(coupled_level(l, Coupling::HEqualsSqrtDt, 1.0));
  s.reference = coupled_level(7, Coupling::HEqualsSqrtDt, 1.0);
  return s;
}

StudyConfig wave_study(KernelSpec kernel, Coupling coupling, int finest, int reference) {
  StudyConfig s;
  s.equation = Equation::Wave;
  s.bc = BoundaryCondition::Dirichlet;
  s.g.kind = GSpec::Kind::MinusQ;
  s.kernel = std::move(kernel);
  for (int l = 1; l <= finest; ++l) s.levels.push_back(coupled_level(l, coupling, 1.0));
  s.reference = coupled_level(reference, coupling, 1.0);
  return s;
}

Outcome rate_criterion(const std::string& tag, const StudyConfig& s, double want_l1, double want_l2, double tol) {
  const RateReport r = sweep_with_invariants(tag, s);
  print_rows(r);
  Outcome o;
  note(o, within(r.slope_l1, want_l1, tol), "L1 slope " + num(r.slope_l1) + " vs " + num(want_l1));
  note(o, within(r.slope_l2, want_l2, tol), "L2 slope " + num(r.slope_l2) + " vs " + num(want_l2));
  return o;
}

Outcome criterion5() {
  Outcome o;
  const int modes = 256;
  const SampleGrid grid = composite_grid(512, 4);
  const Matrix e = eigenfunctions_at(modes, grid.points);
  auto rel_err = [&](const Mesh1D& mesh, const CovMatrix& k, const Vector& diag) {
    const Matrix ref = e * diag.asDiagonal() * e.transpose();
    return grid_l2_norm(fem_cov_on_grid(mesh, k, grid) - ref, grid) / grid_l2_norm(ref, grid);
  };

  const Vector heat = heat_cov_closed_form(modes, 1.0, Vector::Ones(modes));
  const Vector wave = wave_cov_closed_form(modes, 1.0, Vector::Ones(modes));
  std::vector<double> heat_err, wave_err;
  for (const int l : {4, 5, 6}) {
    const int cells = 1 << l;
    AdvDiffConfig a;
    a.mesh = Mesh1D(cells, BoundaryCondition::Dirichlet);
    a.T = 1.0;
    a.steps = cells;
    heat_err.push_back(rel_err(a.mesh, advdiff_run(a), heat));
    WaveConfig w;
    w.mesh = a.mesh;
    w.g.kind = GSpec::Kind::Zero;
    w.T = 1.0;
    w.steps = cells;
    wave_err.push_back(rel_err(w.mesh, extract_position_cov(wave_run(w)), wave));
  }
  std::cout << "    heat relative L2 errors: " << num(heat_err[0]) << ", " << num(heat_err[1]) << ", "
            << num(heat_err[2]) << "\n";
  std::cout << "    wave relative L2 errors: " << num(wave_err[0]) << ", " << num(wave_err[1]) << ", "
            << num(wave_err[2]) << "\n";
  note(o, heat_err[2] <= 0.05, "heat rel err " + num(heat_err[2]) + " <= 0.05");
  note(o, heat_err[1] < heat_err[0] && heat_err[2] < heat_err[1], "heat decreasing");
  note(o, wave_err[2] <= 0.05, "wave rel err " + num(wave_err[2]) + " <= 0.05");
  note(o, wave_err[1] < wave_err[0] && wave_err[2] < wave_err[1], "wave decreasing");
  return o;
}

Outcome criterion6() {
  Outcome o;
  Matrix m(1, 1), a(1, 1), q(1, 1), z(1, 1);
  m << 1.0 / 3.0;
  a << 4.0;
  q << 1.0 / 3.0;
  z << 0.0;
  const double k1 = advdiff_step(z, m, a, q, 0.5, 0.0)(0, 0);
  note(o, std::abs(k1 - 3.0 / 98.0) <= 1e-14, "K_1 = " + num(k1));
  const BlockStep step = build_cn_blocks(m, a, 1.0);
  Matrix want(2, 2);
  want << -0.5, 0.25, -3.0, -0.5;
  const Matrix t = propagator(step);
  note(o, max_abs(t - want) <= 1e-12, "propagator deviation " + num(max_abs(t - want)));
  note(o, std::abs(t.determinant() - 1.0) <= 1e-12 && std::abs(cn_determinant(step) - 1.0) <= 1e-12, "det 1");
  return o;
}

Outcome criterion8() {
  Outcome o;
  AdvDiffConfig cfg;
  cfg.mesh = Mesh1D(16, BoundaryCondition::Neumann);
  cfg.coeffs = advection_coeffs();
  cfg.c0 = 0.125;
  cfg.T = 1.0;
  cfg.steps = 16;
  McConfig mc;
  mc.scheme = cfg;
  mc.n_samples = 10000;
  mc.seed = 20240601;
  const McReport a = mc_validate(mc);
  const McReport b = mc_validate(mc);
  std::cout << "    HS distance " << num(a.hs_distance) << ", jackknife SE " << num(a.hs_std_error)
            << ", consistency gap " << num(a.consistency_gap_hs) << "\n";
  note(o, a.within_band(), "HS " + num(a.hs_distance) + " <= 3 SE + gap = " +
                               num(3.0 * a.hs_std_error + a.consistency_gap_hs));
  note(o, a.empirical == b.empirical && a.hs_distance == b.hs_distance, "bit-identical rerun");
  return o;
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 advdiff white noise rates",
       [] { return rate_criterion("c1", advdiff_study(WhiteNoise{}), 1.0, 1.5, 0.2); }},
      {"2 advdiff exponential kernel rates",
       [] { return rate_criterion("c2", advdiff_study(ExponentialKernel{2.0}), 2.0, 2.0, 0.25); }},
      {"3 wave Matern rates",
       [] {
         return rate_criterion("c3", wave_study(MaternKernel{10.0, 0.01, 0.1}, Coupling::HEqualsDt, 6, 7), 1.0,
                               1.0, 0.2);
       }},
      {"4 wave Brownian bridge rates",
       [] {
         return rate_criterion("c4", wave_study(BrownianBridgeKernel{}, Coupling::HEqualsSqrtDt, 4, 5), 2.0, 2.0,
                               0.3);
       }},
      {"5 spectral oracle equivalence", criterion5},
      {"6 scalar regression", criterion6},
      {"7 invariant suite",
       [] {
         Outcome o;
         o.pass = g_invariants.failures.empty() && g_invariants.checked > 0;
         o.detail = std::to_string(g_invariants.checked) + " solutions checked";
         for (const auto& f : g_invariants.failures) o.detail += "; " + f;
         return o;
       }},
      {"8 Monte Carlo validation", criterion8},
  };

  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << name << " (" << o.detail << ")" << std::endl;
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
