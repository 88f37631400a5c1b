#pragma once
// Refinement sweeps: reference solution, per-level errors in both norms,
// log-log rate fits and report serialization.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "spde_cov/advdiff.hpp"
#include "spde_cov/errnorms.hpp"
#include "spde_cov/error.hpp"
#include "spde_cov/parallel.hpp"
#include "spde_cov/wave.hpp"

namespace spde_cov {

enum class Equation { AdvDiff, Wave };

/// One discretization: n_cells = 1/h cells, steps = T/dt time steps.
struct Level {
  int n_cells = 2;
  int steps = 1;

  double h() const { return 1.0 / n_cells; }
  double dt(double T) const { return T / steps; }
};

/// Builds a level from (h, dt); both must divide their intervals evenly.
inline Level make_level(double h, double dt, double T) {
  const double cells = 1.0 / h, steps = T / dt;
  const auto nc = static_cast<int>(std::lround(cells));
  const auto ns = static_cast<long>(std::lround(steps));
  if (!(h > 0.0) || std::abs(cells - nc) > 1e-9 * cells || nc < 2)
    throw ConfigError("h = " + std::to_string(h) + " does not give an integral cell count >= 2");
  if (!(dt > 0.0) || std::abs(steps - ns) > 1e-9 * steps || ns < 1 || ns > (1L << 30))
    throw ConfigError("dt = " + std::to_string(dt) + " does not divide T into whole steps");
  return {nc, static_cast<int>(ns)};
}

enum class Coupling { HEqualsDt, HEqualsSqrtDt };

/// Level with h = 2^-l and dt = h (or h^2).
inline Level coupled_level(int l, Coupling coupling, double T) {
  const double h = std::ldexp(1.0, -l);
  return make_level(h, coupling == Coupling::HEqualsDt ? h : h * h, T);
}

struct StudyConfig {
  Equation equation = Equation::AdvDiff;
  BoundaryCondition bc = BoundaryCondition::Neumann;
  Coefficients coeffs;
  double c0 = 0.0;
  GSpec g;
  KernelSpec kernel = WhiteNoise{};
  double T = 1.0;
  std::vector<Level> levels;  // strictly decreasing h
  Level reference;
  bool want_l1 = true;
  bool want_l2 = true;
  std::optional<double> expected_rate;
  double rate_tolerance = 0.2;
  int n_samples = 1000;
  std::uint64_t seed = 0;
  std::optional<double> snapshot_t;
  int oracle_modes = 256;
};

inline void validate(const StudyConfig& s) {
  for (std::size_t i = 1; i < s.levels.size(); ++i)
    if (s.levels[i].n_cells <= s.levels[i - 1].n_cells)
      throw ConfigError("levels must be strictly decreasing in h");
  for (const Level& l : s.levels)
    if (l.n_cells > s.reference.n_cells || l.steps > s.reference.steps)
      throw ConfigError("reference must be at least as fine as every level");
  if (s.equation == Equation::Wave && s.bc != BoundaryCondition::Dirichlet)
    throw ConfigError("wave equation requires Dirichlet conditions");
  if (!(s.T > 0.0)) throw ConfigError("T must be positive");
}

inline AdvDiffConfig advdiff_config(const StudyConfig& s, const Level& l) {
  AdvDiffConfig c;
  c.mesh = Mesh1D(l.n_cells, s.bc);
  c.coeffs = s.coeffs;
  c.c0 = s.c0;
  c.kernel = s.kernel;
  c.T = s.T;
  c.steps = l.steps;
  return c;
}

inline WaveConfig wave_config(const StudyConfig& s, const Level& l) {
  WaveConfig c;
  c.mesh = Mesh1D(l.n_cells, BoundaryCondition::Dirichlet);
  c.kernel = s.kernel;
  c.g = s.g;
  c.T = s.T;
  c.steps = l.steps;
  return c;
}

/// Covariance whose error is measured: the full K for advection-diffusion,
/// the position block for the wave equation.
struct LevelSolution {
  Mesh1D mesh;
  CovMatrix k;
  double seconds = 0.0;
};

inline LevelSolution solve_level(const StudyConfig& s, const Level& l,
                                 std::optional<int> stop_after = std::nullopt) {
  const auto start = std::chrono::steady_clock::now();
  LevelSolution out{Mesh1D(l.n_cells, s.equation == Equation::Wave ? BoundaryCondition::Dirichlet : s.bc), {}, 0.0};
  if (s.equation == Equation::AdvDiff)
    out.k = advdiff_run(advdiff_config(s, l), {}, stop_after);
  else
    out.k = extract_position_cov(wave_run(wave_config(s, l), {}, stop_after));
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

struct RateRow {
  int level = 0;
  double h = 0.0;
  double dt = 0.0;
  double err_l1 = std::numeric_limits<double>::quiet_NaN();
  double err_l2 = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0.0;
};

struct RateReport {
  std::vector<RateRow> rows;  // h descending
  double slope_l1 = std::numeric_limits<double>::quiet_NaN();
  double slope_l2 = std::numeric_limits<double>::quiet_NaN();
  double residual_l1 = std::numeric_limits<double>::quiet_NaN();
  double residual_l2 = std::numeric_limits<double>::quiet_NaN();
};

struct RateFit {
  double slope = 0.0;
  double residual = 0.0;  // root mean square of log-residuals
};

/// Least-squares slope of log(err) against log(h). Non-positive or non-finite
/// errors are skipped with a warning on stderr.
inline RateFit fit_rate_detailed(const std::vector<double>& hs, const std::vector<double>& errs) {
  if (hs.size() != errs.size()) throw Error(ErrorKind::ShapeMismatch, "fit_rate: list lengths differ");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!(errs[i] > 0.0) || !std::isfinite(errs[i]) || !(hs[i] > 0.0)) {
      std::cerr << "fit_rate: skipping pair (h=" << hs[i] << ", err=" << errs[i] << ")\n";
      continue;
    }
    lx.push_back(std::log(hs[i]));
    ly.push_back(std::log(errs[i]));
  }
  if (lx.size() < 2) throw Error(ErrorKind::DegenerateFit, "fit_rate: fewer than 2 usable pairs");
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorKind::DegenerateFit, "fit_rate: all h identical");
  RateFit fit;
  fit.slope = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (my + fit.slope * (lx[i] - mx));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

inline double fit_rate(const std::vector<double>& hs, const std::vector<double>& errs) {
  return fit_rate_detailed(hs, errs).slope;
}

/// Fits both norms over the report rows, leaving NaN where no fit exists.
inline void fit_report(RateReport& report) {
  std::vector<double> hs, e1, e2;
  for (const auto& r : report.rows) {
    hs.push_back(r.h);
    e1.push_back(r.err_l1);
    e2.push_back(r.err_l2);
  }
  auto fit = [&](const std::vector<double>& errs, double& slope, double& residual) {
    bool any = false;
    for (double e : errs) any = any || std::isfinite(e);
    if (!any) return;
    try {
      const RateFit f = fit_rate_detailed(hs, errs);
      slope = f.slope;
      residual = f.residual;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateFit) throw;
    }
  };
  fit(e1, report.slope_l1, report.residual_l1);
  fit(e2, report.slope_l2, report.residual_l2);
}

/// Solves the reference and every level (independently, possibly in
/// parallel), then measures errors against the reference and fits rates.
/// `inspect` sees every solution (levels in order, then the reference) before
/// errors are measured.
using SolutionInspector = std::function<void(std::size_t index, const LevelSolution& sol)>;

inline RateReport run_sweep(const StudyConfig& s, const SolutionInspector& inspect = {}) {
  validate(s);
  std::vector<Level> jobs = s.levels;
  jobs.push_back(s.reference);
  std::vector<LevelSolution> sol(jobs.size(), LevelSolution{Mesh1D(2, BoundaryCondition::Dirichlet), {}, 0.0});
  parallel_for(jobs.size(), [&](std::size_t i) { sol[i] = solve_level(s, jobs[i]); });

  if (inspect)
    for (std::size_t i = 0; i < sol.size(); ++i) inspect(i, sol[i]);
  const LevelSolution& ref = sol.back();
  RateReport report;
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    RateRow row;
    row.level = static_cast<int>(i);
    row.h = s.levels[i].h();
    row.dt = s.levels[i].dt(s.T);
    if (s.want_l1) row.err_l1 = err_trace_norm(sol[i].k, sol[i].mesh, ref.k, ref.mesh);
    if (s.want_l2) row.err_l2 = err_hs_norm(sol[i].k, sol[i].mesh, ref.k, ref.mesh);
    row.wall_time_s = sol[i].seconds;
    report.rows.push_back(row);
  }
  fit_report(report);
  return report;
}

// ---------------------------------------------------------------------------
// serialization

enum class ReportFormat { Csv, JsonLines, Gnuplot };

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error(ErrorKind::InvalidArgument, "not a number: '" + text + "'");
  return v;
}

inline void emit(const RateReport& report, ReportFormat format, std::ostream& out) {
  switch (format) {
    case ReportFormat::Csv:
      out << "level,h,dt,err_L1,err_L2,wall_time_s\n";
      for (const auto& r : report.rows)
        out << r.level << ',' << format_number(r.h) << ',' << format_number(r.dt) << ','
            << format_number(r.err_l1) << ',' << format_number(r.err_l2) << ','
            << format_number(r.wall_time_s) << '\n';
      out << "# slope_L1=" << format_number(report.slope_l1) << '\n';
      out << "# slope_L2=" << format_number(report.slope_l2) << '\n';
      break;
    case ReportFormat::JsonLines: {
      auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
      for (const auto& r : report.rows)
        out << nlohmann::json{{"level", r.level},     {"h", num(r.h)},           {"dt", num(r.dt)},
                              {"err_L1", num(r.err_l1)}, {"err_L2", num(r.err_l2)},
                              {"wall_time_s", num(r.wall_time_s)}}
                   .dump()
            << '\n';
      out << nlohmann::json{{"slope_L1", num(report.slope_l1)}, {"slope_L2", num(report.slope_l2)}}.dump()
          << '\n';
      break;
    }
    case ReportFormat::Gnuplot:
      out << "# level h dt err_L1 err_L2 wall_time_s\n";
      for (const auto& r : report.rows)
        out << r.level << ' ' << format_number(r.h) << ' ' << format_number(r.dt) << ' '
            << format_number(r.err_l1) << ' ' << format_number(r.err_l2) << ' '
            << format_number(r.wall_time_s) << '\n';
      out << "# slope_L1=" << format_number(report.slope_l1) << '\n';
      out << "# slope_L2=" << format_number(report.slope_l2) << '\n';
      break;
  }
  if (!out) throw Error(ErrorKind::IoFailure, "failed to write report");
}

inline void emit_to_file(const RateReport& report, ReportFormat format, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  emit(report, format, file);
}

/// Inverse of the CSV emitter.
inline RateReport parse_csv_report(std::istream& in) {
  RateReport report;
  std::string line;
  if (!std::getline(in, line) || line != "level,h,dt,err_L1,err_L2,wall_time_s")
    throw Error(ErrorKind::IoFailure, "missing CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# slope_L1=", 0) == 0) {
      report.slope_l1 = parse_number(line.substr(11));
      continue;
    }
    if (line.rfind("# slope_L2=", 0) == 0) {
      report.slope_l2 = parse_number(line.substr(11));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 6) throw Error(ErrorKind::IoFailure, "bad CSV row: " + line);
    RateRow r;
    r.level = std::stoi(cells[0]);
    r.h = parse_number(cells[1]);
    r.dt = parse_number(cells[2]);
    r.err_l1 = parse_number(cells[3]);
    r.err_l2 = parse_number(cells[4]);
    r.wall_time_s = parse_number(cells[5]);
    report.rows.push_back(r);
  }
  return report;
}

/// Covariance function on the mesh nodes, one (x, y, value) triple per line.
inline void emit_covariance(const std::vector<double>& nodes, const Matrix& values, ReportFormat format,
                            std::ostream& out) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  if (values.rows() != n || values.cols() != n)
    throw Error(ErrorKind::ShapeMismatch, "emit_covariance: value matrix does not match nodes");
  if (format == ReportFormat::Csv) out << "x,y,cov\n";
  if (format == ReportFormat::Gnuplot) out << "# x y cov\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::string x = format_number(nodes[i]), y = format_number(nodes[j]);
      const std::string v = format_number(values(i, j));
      switch (format) {
        case ReportFormat::Csv: out << x << ',' << y << ',' << v << '\n'; break;
        case ReportFormat::Gnuplot: out << x << ' ' << y << ' ' << v << '\n'; break;
        case ReportFormat::JsonLines:
          out << nlohmann::json{{"x", nodes[i]}, {"y", nodes[j]}, {"cov", values(i, j)}}.dump() << '\n';
          break;
      }
    }
    if (format == ReportFormat::Gnuplot) out << '\n';
  }
  if (!out) throw Error(ErrorKind::IoFailure, "failed to write covariance");
}

}  // namespace spde_cov
