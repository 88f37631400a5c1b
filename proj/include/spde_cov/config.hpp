#pragma once
// Study configuration files: flat "key = value" text with [equation],
// [kernel] and [study] sections. '#' and ';' start comments, values may be
// double-quoted. Coefficient functions come from a fixed catalog:
//     const:<v>   sin2pix   cos2pix   x   one_plus_x
//
//   [equation]
//   type = advdiff            # advdiff | wave
//   bc = neumann              # dirichlet | neumann (wave: dirichlet only)
//   a11 = "const:4"
//   a1 = "sin2pix"
//   a0 = "const:0"
//   lambda0 = 4
//   c0 = 0.125                # or auto (uses epsilon, default 0.5)
//   g = minus_q               # wave: minus_q | zero
//   T = 1
//
//   [kernel]
//   type = exponential        # white | exponential | matern | brownian_bridge | zero
//   scale = 2                 # exponential
//   sigma = 10                # matern: sigma, nu, rho
//
//   [study]
//   coupling = h=sqrt(dt)     # or h=dt; with level_min, level_max, reference_level
//   levels = 0.5/0.25, 0.25/0.0625   # explicit h/dt pairs instead of a coupling
//   reference = 0.0078125/0.00006103515625
//   norms = L1, L2
//   expected_rate = 1.0       # optional, with rate_tolerance
//   samples = 10000
//   seed = 42
//   h = 0.0625                # single-run commands (default: reference level)
//   dt = 0.0625
//   snapshot_t = 0.1
//   oracle_modes = 256

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "spde_cov/error.hpp"
#include "spde_cov/study.hpp"

namespace spde_cov {

using IniSection = std::map<std::string, std::string>;
using IniData = std::map<std::string, IniSection>;

namespace detail {

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (!quoted && (line[i] == '#' || line[i] == ';')) return line.substr(0, i);
  }
  return line;
}

}  // namespace detail

inline IniData parse_ini(const std::string& text) {
  static const std::set<std::string> kSections = {"equation", "kernel", "study"};
  IniData data;
  std::string section;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const std::string line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = detail::lower(detail::trim(line.substr(1, line.size() - 2)));
      if (!kSections.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      data[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of a section");
    const std::string key = detail::lower(detail::trim(line.substr(0, eq)));
    std::string value = detail::trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key.empty()) throw ConfigError(where + "empty key");
    if (data[section].count(key)) throw ConfigError(where + "duplicate key '" + key + "'");
    data[section][key] = value;
  }
  return data;
}

namespace detail {

class SectionReader {
 public:
  SectionReader(const IniData& data, const std::string& name) : name_(name) {
    if (auto it = data.find(name); it != data.end()) values_ = it->second;
  }

  std::optional<std::string> text(const std::string& key) {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> number(const std::string& key) {
    const auto t = text(key);
    if (!t) return std::nullopt;
    try {
      std::size_t pos = 0;
      const double v = std::stod(*t, &pos);
      if (pos != t->size() || !std::isfinite(v)) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("[" + name_ + "] " + key + ": not a number: '" + *t + "'");
    }
  }

  std::optional<long long> integer(const std::string& key) {
    const auto t = text(key);
    if (!t) return std::nullopt;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(*t, &pos);
      if (pos != t->size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("[" + name_ + "] " + key + ": not an integer: '" + *t + "'");
    }
  }

  void reject_unknown() const {
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) throw ConfigError("[" + name_ + "] unknown key '" + k + "'");
  }

 private:
  std::string name_;
  IniSection values_;
  std::set<std::string> used_;
};

inline std::function<double(double)> catalog_function(const std::string& name) {
  const std::string n = lower(trim(name));
  if (n.rfind("const:", 0) == 0) {
    double v = 0.0;
    try {
      std::size_t pos = 0;
      v = std::stod(n.substr(6), &pos);
      if (pos != n.size() - 6) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ConfigError("bad constant coefficient '" + name + "'");
    }
    return [v](double) { return v; };
  }
  if (n == "sin2pix") return [](double x) { return std::sin(2.0 * std::numbers::pi * x); };
  if (n == "cos2pix") return [](double x) { return std::cos(2.0 * std::numbers::pi * x); };
  if (n == "x") return [](double x) { return x; };
  if (n == "one_plus_x") return [](double x) { return 1.0 + x; };
  throw ConfigError("unknown coefficient function '" + name + "'");
}

inline std::vector<Level> parse_level_list(const std::string& text, double T) {
  std::vector<Level> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    const auto slash = item.find('/');
    if (slash == std::string::npos) throw ConfigError("level '" + item + "' must be written h/dt");
    try {
      out.push_back(make_level(std::stod(item.substr(0, slash)), std::stod(item.substr(slash + 1)), T));
    } catch (const std::invalid_argument&) {
      throw ConfigError("level '" + item + "' is not numeric");
    }
  }
  return out;
}

}  // namespace detail

/// Study plus the single-run level used by the advdiff/wave/mc/oracle commands.
struct LoadedConfig {
  StudyConfig study;
  Level single;
};

inline LoadedConfig build_config(const IniData& data) {
  LoadedConfig out;
  StudyConfig& s = out.study;

  detail::SectionReader eq(data, "equation");
  const std::string type = detail::lower(eq.text("type").value_or("advdiff"));
  if (type == "advdiff") s.equation = Equation::AdvDiff;
  else if (type == "wave") s.equation = Equation::Wave;
  else throw ConfigError("[equation] type must be advdiff or wave");

  const std::string bc = detail::lower(
      eq.text("bc").value_or(s.equation == Equation::Wave ? "dirichlet" : "neumann"));
  if (bc == "dirichlet") s.bc = BoundaryCondition::Dirichlet;
  else if (bc == "neumann") s.bc = BoundaryCondition::Neumann;
  else throw ConfigError("[equation] bc must be dirichlet or neumann");

  if (auto v = eq.text("a11")) s.coeffs.a11 = detail::catalog_function(*v);
  if (auto v = eq.text("a1")) s.coeffs.a1 = detail::catalog_function(*v);
  if (auto v = eq.text("a0")) s.coeffs.a0 = detail::catalog_function(*v);
  s.coeffs.lambda0 = eq.number("lambda0").value_or(1.0);
  if (!(s.coeffs.lambda0 > 0.0)) throw ConfigError("[equation] lambda0 must be positive");
  const double epsilon = eq.number("epsilon").value_or(0.5);
  if (auto c0 = eq.text("c0"); c0 && detail::lower(*c0) == "auto") {
    try {
      s.c0 = compute_c0(s.coeffs, epsilon);
    } catch (const Error& e) {
      throw ConfigError(std::string("[equation] ") + e.what());
    }
  } else {
    s.c0 = eq.number("c0").value_or(0.0);
  }
  const std::string g = detail::lower(eq.text("g").value_or("minus_q"));
  if (g == "minus_q") s.g.kind = GSpec::Kind::MinusQ;
  else if (g == "zero") s.g.kind = GSpec::Kind::Zero;
  else throw ConfigError("[equation] g must be minus_q or zero");
  s.T = eq.number("t").value_or(1.0);
  if (!(s.T > 0.0)) throw ConfigError("[equation] T must be positive");
  eq.reject_unknown();

  detail::SectionReader kr(data, "kernel");
  const std::string kt = detail::lower(kr.text("type").value_or("white"));
  if (kt == "white") {
    s.kernel = WhiteNoise{};
  } else if (kt == "exponential") {
    s.kernel = ExponentialKernel{kr.number("scale").value_or(1.0)};
  } else if (kt == "matern") {
    s.kernel = MaternKernel{kr.number("sigma").value_or(1.0), kr.number("nu").value_or(0.5),
                            kr.number("rho").value_or(1.0)};
  } else if (kt == "brownian_bridge") {
    s.kernel = BrownianBridgeKernel{};
  } else if (kt == "zero") {
    s.kernel = CustomKernel{[](double, double) { return 0.0; }};
  } else {
    throw ConfigError("[kernel] unknown type '" + kt + "'");
  }
  try {
    validate(s.kernel);
  } catch (const Error& e) {
    throw ConfigError(std::string("[kernel] ") + e.what());
  }
  kr.reject_unknown();

  detail::SectionReader st(data, "study");
  const auto coupling_text = st.text("coupling");
  const auto levels_text = st.text("levels");
  std::optional<Coupling> coupling;
  if (coupling_text) {
    const std::string c = detail::lower(*coupling_text);
    if (c == "h=dt") coupling = Coupling::HEqualsDt;
    else if (c == "h=sqrt(dt)") coupling = Coupling::HEqualsSqrtDt;
    else throw ConfigError("[study] coupling must be h=dt or h=sqrt(dt)");
  }
  const auto lmin = st.integer("level_min"), lmax = st.integer("level_max");
  const auto lref = st.integer("reference_level");
  const auto ref_text = st.text("reference");
  if (levels_text && coupling_text) throw ConfigError("[study] give either levels or coupling, not both");
  if (levels_text) {
    s.levels = detail::parse_level_list(*levels_text, s.T);
  } else if (coupling) {
    if (!lmin || !lmax || *lmin < 1 || *lmax < *lmin || *lmax > 20)
      throw ConfigError("[study] coupling needs 1 <= level_min <= level_max <= 20");
    for (long long l = *lmin; l <= *lmax; ++l)
      s.levels.push_back(coupled_level(static_cast<int>(l), *coupling, s.T));
  }
  if (ref_text) {
    const auto r = detail::parse_level_list(*ref_text, s.T);
    if (r.size() != 1) throw ConfigError("[study] reference must be a single h/dt pair");
    s.reference = r.front();
  } else if (lref && coupling) {
    if (*lref < 1 || *lref > 20) throw ConfigError("[study] reference_level out of range");
    s.reference = coupled_level(static_cast<int>(*lref), *coupling, s.T);
  } else if (!s.levels.empty()) {
    throw ConfigError("[study] levels given without a reference");
  } else {
    s.reference = make_level(0.0625, 0.0625 * s.T, s.T);
  }
  if (auto norms = st.text("norms")) {
    const std::string n = detail::lower(*norms);
    s.want_l1 = n.find("l1") != std::string::npos;
    s.want_l2 = n.find("l2") != std::string::npos;
    if (!s.want_l1 && !s.want_l2) throw ConfigError("[study] norms must name L1 and/or L2");
  }
  s.expected_rate = st.number("expected_rate");
  s.rate_tolerance = st.number("rate_tolerance").value_or(0.2);
  s.n_samples = static_cast<int>(st.integer("samples").value_or(1000));
  s.seed = static_cast<std::uint64_t>(st.integer("seed").value_or(0));
  s.snapshot_t = st.number("snapshot_t");
  if (s.snapshot_t && !(*s.snapshot_t >= 0.0 && *s.snapshot_t <= s.T))
    throw ConfigError("[study] snapshot_t must lie in [0, T]");
  s.oracle_modes = static_cast<int>(st.integer("oracle_modes").value_or(256));
  if (s.oracle_modes < 1 || s.oracle_modes > 256) throw ConfigError("[study] oracle_modes must be in [1, 256]");

  const auto h = st.number("h"), dt = st.number("dt");
  if (h.has_value() != dt.has_value()) throw ConfigError("[study] h and dt must be given together");
  out.single = h ? make_level(*h, *dt, s.T) : s.reference;
  st.reject_unknown();

  validate(s);
  return out;
}

inline LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return build_config(parse_ini(buf.str()));
}

}  // namespace spde_cov
