#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hestonfd/operators.hpp"

using namespace hestonfd;

namespace {

HestonParams unit_params() {
  HestonParams p;
  p.r = p.kappa = p.eta = p.sigma = p.rho = 1;
  p.L = 0;
  p.S = 4;
  p.V = 4;
  return p;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Node-by-node application of the difference formulas; independent of the
// Kronecker assembly.
Matrix assemble_by_nodes(const HestonParams& p, const GridSpec& g) {
  const int m1 = g.m1, m2 = g.m2;
  Matrix a = Matrix::Zero(g.m(), g.m());
  for (int j = 1; j <= m2; ++j) {
    for (int i = 1; i <= m1; ++i) {
      const int row = g.flat_index(i, j);
      const double s = g.s_points(i - 1), v = g.v_points(j - 1);
      auto add = [&](int ii, int jj, double val) {
        if (ii >= 1 && ii <= m1 && jj >= 1 && jj <= m2) a(row, g.flat_index(ii, jj)) += val;
      };
      const double us = p.r * s / (2 * g.ds);
      add(i + 1, j, us);
      add(i - 1, j, -us);
      const double uv = p.kappa * (p.eta - v) / (2 * g.dv);
      add(i, j + 1, uv);
      add(i, j - 1, -uv);
      const double uss = 0.5 * s * s * v / (g.ds * g.ds);
      add(i - 1, j, uss);
      add(i, j, -2 * uss);
      add(i + 1, j, uss);
      const double uvv = 0.5 * p.sigma * p.sigma * v / (g.dv * g.dv);
      add(i, j - 1, uvv);
      add(i, j, -2 * uvv);
      add(i, j + 1, uvv);
      const double usv = p.rho * p.sigma * s * v / (4 * g.ds * g.dv);
      add(i + 1, j + 1, usv);
      add(i - 1, j - 1, usv);
      add(i - 1, j + 1, -usv);
      add(i + 1, j - 1, -usv);
      add(i, j, -p.r);
    }
  }
  return a;
}

}  // namespace

TEST(Stencils, FirstDifferenceWithUnitWidth) {
  HestonParams p = unit_params();
  const auto g = make_grid(p, 3, 3);
  ASSERT_DOUBLE_EQ(g.ds, 1.0);
  const auto st = build_stencils(g);
  EXPECT_EQ(st.L1, tridiag(3, -0.5, 0, 0.5));
}

TEST(Stencils, SecondDifferenceWithHalfWidth) {
  HestonParams p = unit_params();
  p.S = 2;
  const auto g = make_grid(p, 3, 3);
  ASSERT_DOUBLE_EQ(g.ds, 0.5);
  EXPECT_EQ(build_stencils(g).M1, 4 * tridiag(3, 1, -2, 1));
}

TEST(Stencils, ShiftTimesTransposeDropsLastEntry) {
  for (int n : {3, 4, 9}) {
    const Matrix e = shift_matrix(n);
    Eigen::VectorXd expect = Eigen::VectorXd::Ones(n);
    expect(n - 1) = 0;
    EXPECT_EQ(Matrix(e * e.transpose()), Matrix(expect.asDiagonal()));
  }
}

TEST(Stencils, StructuralInvariants) {
  HestonParams p;
  p.L = 10;
  const auto g = make_grid(p, 11, 6);
  const auto st = build_stencils(g);
  EXPECT_EQ(Matrix(st.L1.transpose()), Matrix(-st.L1));
  EXPECT_EQ(Matrix(st.L2.transpose()), Matrix(-st.L2));
  EXPECT_EQ(Matrix(st.M1.transpose()), st.M1);
  for (int i = 1; i < g.m1 - 1; ++i) EXPECT_NEAR(st.M1.row(i).sum(), 0.0, 1e-15 / (g.ds * g.ds));
  for (int i = 0; i < g.m2; ++i)
    for (int j = 0; j < g.m2; ++j) EXPECT_EQ(st.E(i, j), j == i + 1 ? 1.0 : 0.0);
  EXPECT_EQ(StencilSet::F(4), tridiag(4, 0.5, 0, 0.5));
}

TEST(Kron, MatchesDefinition) {
  Matrix a(2, 2), b(2, 3);
  a << 1, 2, 3, 4;
  b << 0, 5, 1, 6, 7, 0;
  const Matrix k = kron(a, b);
  ASSERT_EQ(k.rows(), 4);
  ASSERT_EQ(k.cols(), 6);
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(k(p * 2 + i, q * 3 + j), a(p, q) * b(i, j));
}

TEST(Operators, NoMixedTermWithoutCorrelation) {
  HestonParams p;
  p.rho = 0;
  const auto g = make_grid(p, 6, 4);
  EXPECT_TRUE(build_operators(p, g).A4.isZero(0));
}

TEST(Operators, DiffusionInSRowAtCentreNode) {
  const HestonParams p = unit_params();
  const auto g = make_grid(p, 3, 3);
  const auto ops = build_operators(p, g);
  const int row = g.flat_index(2, 2);
  Eigen::RowVectorXd expect = Eigen::RowVectorXd::Zero(g.m());
  const double c = 0.5 * g.v_points(1) * g.s_points(1) * g.s_points(1);
  expect(g.flat_index(1, 2)) = c;
  expect(g.flat_index(2, 2)) = -2 * c;
  expect(g.flat_index(3, 2)) = c;
  EXPECT_EQ(ops.A3.row(row), expect);
  EXPECT_DOUBLE_EQ(c, 4.0);
}

TEST(Operators, AdvectionSymmetricParts) {
  HestonParams p;
  p.r = 0.07;
  p.kappa = 1.3;
  p.L = 5;
  const auto g = make_grid(p, 8, 6);
  const Matrix I1 = Matrix::Identity(g.m1, g.m1), I2 = Matrix::Identity(g.m2, g.m2);
  const auto ops = build_operators(p, g);
  const Matrix expect1 = -p.r * kron(I2, averaging_matrix(g.m1));
  EXPECT_LE(max_abs(ops.A1 + ops.A1.transpose() - expect1), 1e-14 * max_abs(ops.A1));
  for (double eta : {0.04, 3.0}) {
    p.eta = eta;
    const auto o = build_operators(p, g);
    const Matrix expect2 = p.kappa * kron(averaging_matrix(g.m2), I1);
    EXPECT_LE(max_abs(o.A2 + o.A2.transpose() - expect2), 1e-14 * std::max(1.0, max_abs(o.A2))) << "eta=" << eta;
  }
}

TEST(Operators, MixedProductForMixedTerm) {
  for (double L : {0.0, 10.0}) {
    HestonParams p;
    p.L = L;
    const auto g = make_grid(p, 9, 7);
    const auto st = build_stencils(g);
    const Matrix D1 = g.s_points.asDiagonal(), D2 = g.v_points.asDiagonal();
    const Matrix lhs = kron(Matrix(D2 * st.L2), Matrix(D1 * st.L1));
    const Matrix rhs = kron(D2, D1) * kron(st.L2, st.L1);
    EXPECT_LE(max_abs(lhs - rhs), 1e-13 * max_abs(lhs));
  }
}

TEST(Operators, SparsityOfTensorStencils) {
  HestonParams p;
  p.rho = -0.7;
  const auto g = make_grid(p, 12, 8);
  const auto ops = build_operators(p, g);
  const auto m = g.m();
  EXPECT_LE(nonzeros(ops.A4), 9 * m);
  for (const Matrix* a : {&ops.A1, &ops.A2, &ops.A3, &ops.A5}) EXPECT_LE(nonzeros(*a), 3 * m);
}

TEST(Operators, FullMatrixIsSumMinusReaction) {
  HestonParams p;
  p.rho = 0.3;
  const auto g = make_grid(p, 6, 5);
  const auto ops = build_operators(p, g);
  const Matrix sum = ops.A1 + ops.A2 + ops.A3 + ops.A4 + ops.A5 - p.r * Matrix::Identity(g.m(), g.m());
  EXPECT_EQ(ops.A, sum);
  EXPECT_EQ(ops.diffusion, Matrix(ops.A3 + ops.A4 + ops.A5));
}

TEST(Operators, KroneckerAssemblyMatchesNodeStencils) {
  for (double rho : {-1.0, 0.4}) {
    for (double L : {0.0, 10.0}) {
      HestonParams p;
      p.rho = rho;
      p.L = L;
      p.eta = 0.3;
      const auto g = make_grid(p, 7, 5);
      const Matrix a = build_operators(p, g).A;
      EXPECT_LE(max_abs(a - assemble_by_nodes(p, g)), 1e-12 * max_abs(a)) << "rho=" << rho << " L=" << L;
    }
  }
}

TEST(Commutator, ExactOnIntegerGrid) {
  HestonParams p = unit_params();
  const auto g = make_grid(p, 3, 3);
  EXPECT_EQ(commutator_check(g), 0.0);
}

TEST(Commutator, RoundoffOnProductionGrids) {
  HestonParams p;
  p.L = 10;
  p.S = 800;
  EXPECT_LE(commutator_check(make_grid(p, 25, 5)), 1e-10);

  p.L = 0;
  p.S = 100 * std::sqrt(2.0);
  const auto g = make_grid(p, 50, 5);
  EXPECT_LE(commutator_check(g), 1e-13 * std::max(1.0, 1.0 / (g.ds * g.ds)));
  for (int m1 : {3, 10, 30, 50}) {
    p.S = 800;
    const auto gg = make_grid(p, m1, 4);
    EXPECT_LE(commutator_check(gg), 1e-13 * std::max(1.0, 1.0 / (gg.ds * gg.ds))) << m1;
  }
}

TEST(Transformed, AntisymmetryAndSimilarity) {
  HestonParams p;
  p.L = 10;
  const auto g = make_grid(p, 20, 5);
  const auto tr = transformed_operators(g);
  EXPECT_LE(tr.antisymmetry_residual, 1e-15 * max_abs(tr.tL1));
  EXPECT_LE(tr.similarity_residual, 1e-13 * max_abs(tr.tM1));
  const Eigen::VectorXd sq = g.s_points.cwiseSqrt();
  const Matrix cs_back = sq.asDiagonal() * tr.tL1 * sq.cwiseInverse().asDiagonal();
  EXPECT_LE(max_abs(cs_back - tr.Cs), 1e-13 * max_abs(tr.Cs));
}

TEST(Transformed, ConvectionMatrixOnIntegerGrid) {
  HestonParams p = unit_params();
  const auto g = make_grid(p, 3, 3);
  const auto tr = transformed_operators(g);
  EXPECT_EQ(Eigen::RowVector3d(tr.Cs.row(1)), Eigen::RowVector3d(-1, 0, 1));
}

TEST(MatrixDump, SeventeenDigitsRoundTrip) {
  Matrix m(2, 3);
  m << 1.0 / 3.0, -2.5e-17, 0, 6.02214076e23, std::nextafter(1.0, 2.0), -7;
  std::ostringstream os;
  write_matrix(os, m);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  std::istringstream is(text);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      double x;
      is >> x;
      EXPECT_EQ(x, m(i, j));
    }
  EXPECT_EQ(text.substr(0, text.find(' ')), "0.33333333333333331");
}
