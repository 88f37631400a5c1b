#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "spde_cov/errnorms.hpp"

using namespace spde_cov;

namespace {

Matrix random_sym(int n, std::mt19937_64& rng, bool psd) {
  std::normal_distribution<double> nd;
  Matrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = nd(rng);
  return psd ? Matrix(b * b.transpose()) : symmetrized(b);
}

}  // namespace

TEST(ErrNorms, IdenticalOperatorsGiveZero) {
  std::mt19937_64 rng(1);
  const Mesh1D mesh(8, BoundaryCondition::Neumann);
  const Matrix k = random_sym(9, rng, true);
  EXPECT_LT(err_trace_norm(k, mesh, k, mesh), 1e-10 * k.trace());
  EXPECT_LT(err_hs_norm(k, mesh, k, mesh), 1e-6 * k.norm());
}

TEST(ErrNorms, RankOneOneDof) {
  const Mesh1D mesh(2, BoundaryCondition::Dirichlet);
  for (const double c : {1.0, 2.5, -0.7}) {
    Matrix k(1, 1), z = Matrix::Zero(1, 1);
    k << c;
    EXPECT_NEAR(err_trace_norm(k, mesh, z, mesh), std::abs(c) / 3.0, 1e-14);
    EXPECT_NEAR(err_hs_norm(k, mesh, z, mesh), std::abs(c) / 3.0, 1e-14);
  }
}

TEST(ErrNorms, PsdAgainstZeroIsTraceOfMK) {
  std::mt19937_64 rng(2);
  const Mesh1D mesh(6, BoundaryCondition::Dirichlet);
  const Matrix k = random_sym(5, rng, true);
  EXPECT_NEAR(err_trace_norm(k, mesh, Matrix::Zero(5, 5), mesh), (assemble_mass(mesh) * k).trace(), 1e-12);
}

TEST(ErrNorms, MatchesNystromOracleAcrossMeshes) {
  std::mt19937_64 rng(3);
  for (const bool dir : {true, false}) {
    const auto bc = dir ? BoundaryCondition::Dirichlet : BoundaryCondition::Neumann;
    for (const auto& [ca, cb] : std::vector<std::pair<int, int>>{{4, 8}, {3, 5}, {6, 6}}) {
      const Mesh1D a(ca, bc), b(cb, bc);
      const Matrix k = random_sym(a.dofs(), rng, false);
      const Matrix r = random_sym(b.dofs(), rng, true);
      const double l1 = oracle::trace_norm(k, ca, r, cb, dir);
      const double l2 = oracle::hs_norm(k, ca, r, cb, dir);
      EXPECT_NEAR(err_trace_norm(k, a, r, b), l1, 1e-10 * l1);
      EXPECT_NEAR(err_hs_norm(k, a, r, b), l2, 1e-9 * l2);
    }
  }
}

TEST(ErrNorms, SymmetricInArguments) {
  std::mt19937_64 rng(4);
  const Mesh1D a(4, BoundaryCondition::Neumann), b(16, BoundaryCondition::Neumann);
  const Matrix k = random_sym(5, rng, true), r = random_sym(17, rng, true);
  EXPECT_NEAR(err_trace_norm(k, a, r, b), err_trace_norm(r, b, k, a), 1e-10);
  EXPECT_NEAR(err_hs_norm(k, a, r, b), err_hs_norm(r, b, k, a), 1e-10);
}

TEST(ErrNorms, TriangleInequalityAndSchattenOrdering) {
  std::mt19937_64 rng(5);
  const auto bc = BoundaryCondition::Dirichlet;
  const Mesh1D a(4, bc), b(8, bc), c(16, bc);
  for (int t = 0; t < 5; ++t) {
    const Matrix ka = random_sym(3, rng, true), kb = random_sym(7, rng, true), kc = random_sym(15, rng, true);
    const double ab1 = err_trace_norm(ka, a, kb, b), bc1 = err_trace_norm(kb, b, kc, c);
    const double ac1 = err_trace_norm(ka, a, kc, c);
    const double ab2 = err_hs_norm(ka, a, kb, b), bc2 = err_hs_norm(kb, b, kc, c);
    const double ac2 = err_hs_norm(ka, a, kc, c);
    EXPECT_LE(ac1, ab1 + bc1 + 1e-12);
    EXPECT_LE(ac2, ab2 + bc2 + 1e-12);
    EXPECT_LE(ab2, ab1 + 1e-12);
    EXPECT_LE(ac2, ac1 + 1e-12);
  }
}

TEST(ErrNorms, ShapeAndBoundaryErrors) {
  const Mesh1D a(4, BoundaryCondition::Dirichlet), n(4, BoundaryCondition::Neumann);
  EXPECT_THROW(err_hs_norm(Matrix::Zero(2, 2), a, Matrix::Zero(3, 3), a), Error);
  EXPECT_THROW(err_trace_norm(Matrix::Zero(3, 3), a, Matrix::Zero(5, 5), n), Error);
}

TEST(MinRelativeEigenvalue, DetectsIndefinite) {
  const Mesh1D mesh(4, BoundaryCondition::Dirichlet);
  const Matrix m = assemble_mass(mesh);
  EXPECT_GT(min_relative_eigenvalue(Matrix::Identity(3, 3), m), 0.0);
  Matrix k = Matrix::Identity(3, 3);
  k(1, 1) = -1.0;
  EXPECT_LT(min_relative_eigenvalue(k, m), -0.1);
  EXPECT_EQ(min_relative_eigenvalue(Matrix::Zero(3, 3), m), 0.0);
}
