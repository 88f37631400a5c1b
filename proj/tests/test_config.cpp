#include <gtest/gtest.h>

#include "spde_cov/config.hpp"

using namespace spde_cov;

namespace {

LoadedConfig build(const std::string& text) { return build_config(parse_ini(text)); }

}  // namespace

TEST(Ini, SectionsCommentsAndQuotes) {
  const IniData d = parse_ini("# top\n[Equation]\nType = advdiff ; trailing\n\n[kernel]\ntype = \"white\"\n");
  EXPECT_EQ(d.at("equation").at("type"), "advdiff");
  EXPECT_EQ(d.at("kernel").at("type"), "white");
}

TEST(Ini, SyntaxErrors) {
  EXPECT_THROW(parse_ini("[equation\n"), ConfigError);
  EXPECT_THROW(parse_ini("[mystery]\n"), ConfigError);
  EXPECT_THROW(parse_ini("type = advdiff\n"), ConfigError);
  EXPECT_THROW(parse_ini("[equation]\njust words\n"), ConfigError);
  EXPECT_THROW(parse_ini("[equation]\ntype = a\ntype = b\n"), ConfigError);
}

TEST(BuildConfig, WhiteNoiseStudy) {
  const LoadedConfig c = build(R"(
[equation]
type = advdiff
bc = neumann
a11 = const:4
a1 = sin2pix
lambda0 = 4
c0 = auto
T = 1

[kernel]
type = white

[study]
coupling = h=sqrt(dt)
level_min = 1
level_max = 3
reference_level = 5
norms = L1,L2
expected_rate = 1.5
)");
  const StudyConfig& s = c.study;
  EXPECT_EQ(s.equation, Equation::AdvDiff);
  EXPECT_EQ(s.bc, BoundaryCondition::Neumann);
  EXPECT_NEAR(s.c0, 0.125, 1e-15);
  EXPECT_DOUBLE_EQ(s.coeffs.a11(0.3), 4.0);
  ASSERT_EQ(s.levels.size(), 3u);
  EXPECT_EQ(s.levels[2].n_cells, 8);
  EXPECT_EQ(s.levels[2].steps, 64);
  EXPECT_EQ(s.reference.n_cells, 32);
  EXPECT_EQ(s.reference.steps, 1024);
  EXPECT_TRUE(s.want_l1 && s.want_l2);
  EXPECT_EQ(*s.expected_rate, 1.5);
  EXPECT_TRUE(std::holds_alternative<WhiteNoise>(s.kernel));
}

TEST(BuildConfig, WaveWithExplicitLevels) {
  const LoadedConfig c = build(R"(
[equation]
type = wave
g = minus_q
[kernel]
type = matern
sigma = 10
nu = 0.01
rho = 0.1
[study]
levels = 0.5/0.5, 0.25/0.25
reference = 0.125/0.125
h = 0.25
dt = 0.125
snapshot_t = 0.5
)");
  EXPECT_EQ(c.study.equation, Equation::Wave);
  EXPECT_EQ(c.study.bc, BoundaryCondition::Dirichlet);
  const auto& m = std::get<MaternKernel>(c.study.kernel);
  EXPECT_EQ(m.sigma, 10.0);
  EXPECT_EQ(m.nu, 0.01);
  EXPECT_EQ(c.single.n_cells, 4);
  EXPECT_EQ(c.single.steps, 8);
  EXPECT_EQ(*c.study.snapshot_t, 0.5);
}

TEST(BuildConfig, Rejections) {
  EXPECT_THROW(build("[equation]\ntype = heat\n"), ConfigError);
  EXPECT_THROW(build("[equation]\ncolour = blue\n"), ConfigError);
  EXPECT_THROW(build("[equation]\na1 = tan\n"), ConfigError);
  EXPECT_THROW(build("[equation]\nc0 = abc\n"), ConfigError);
  EXPECT_THROW(build("[equation]\nT = -1\n"), ConfigError);
  EXPECT_THROW(build("[equation]\ntype = wave\nbc = neumann\n"), ConfigError);
  EXPECT_THROW(build("[kernel]\ntype = exponential\nscale = 0\n"), ConfigError);
  EXPECT_THROW(build("[study]\nlevels = 0.5/0.5\n"), ConfigError);
  EXPECT_THROW(build("[study]\nlevels = 0.3/0.5\nreference = 0.125/0.125\n"), ConfigError);
  EXPECT_THROW(build("[study]\nh = 0.25\n"), ConfigError);
  EXPECT_THROW(build("[study]\nnorms = L3\n"), ConfigError);
  EXPECT_THROW(build("[study]\ncoupling = h=dt\nlevel_min = 3\nlevel_max = 2\n"), ConfigError);
  EXPECT_THROW(build("[study]\nsnapshot_t = 2\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/file.ini"), ConfigError);
}
