#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/Dense>

#include "hestonfd/error.hpp"
#include "hestonfd/grid.hpp"

namespace hestonfd {

using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Dense n x n tridiagonal matrix with constant bands (lower, diag, upper).
inline Matrix tridiag(int n, double lower, double diag, double upper) {
  Matrix t = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    t(i, i) = diag;
    if (i > 0) t(i, i - 1) = lower;
    if (i + 1 < n) t(i, i + 1) = upper;
  }
  return t;
}

/// Kronecker product a (x) b. The right factor acts on the fast (s) index.
template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index p = 0; p < a.rows(); ++p)
    for (Eigen::Index q = 0; q < a.cols(); ++q)
      out.block(p * b.rows(), q * b.cols(), b.rows(), b.cols()) = a(p, q) * b;
  return out;
}

/// tridiag(1/2, 0, 1/2); its eigenvalues are cos(k*pi/(n+1)).
inline Matrix averaging_matrix(int n) { return tridiag(n, 0.5, 0.0, 0.5); }

/// Forward shift tridiag(0, 0, 1).
inline Matrix shift_matrix(int n) { return tridiag(n, 0.0, 0.0, 1.0); }

/// One-dimensional central difference matrices on the interior grid.
struct StencilSet {
  Matrix L1;  ///< first derivative in s
  Matrix M1;  ///< second derivative in s
  Matrix L2;  ///< first derivative in v
  Matrix M2;  ///< second derivative in v
  Matrix E;   ///< m2 x m2 forward shift

  static Matrix F(int n) { return averaging_matrix(n); }
};

inline StencilSet build_stencils(const GridSpec& grid) {
  const double ds = grid.ds, dv = grid.dv;
  return StencilSet{
      tridiag(grid.m1, -1.0, 0.0, 1.0) / (2 * ds),
      tridiag(grid.m1, 1.0, -2.0, 1.0) / (ds * ds),
      tridiag(grid.m2, -1.0, 0.0, 1.0) / (2 * dv),
      tridiag(grid.m2, 1.0, -2.0, 1.0) / (dv * dv),
      shift_matrix(grid.m2),
  };
}

/// The five semi-discrete Heston operators and their combinations.
struct OperatorSet {
  int m1 = 0;
  int m2 = 0;
  Matrix A1;  ///< advection in s
  Matrix A2;  ///< advection in v
  Matrix A3;  ///< diffusion in s
  Matrix A4;  ///< mixed derivative
  Matrix A5;  ///< diffusion in v
  Matrix A;          ///< A1 + ... + A5 - rI
  Matrix diffusion;  ///< A3 + A4 + A5

  int m() const { return m1 * m2; }
};

inline OperatorSet build_operators(const HestonParams& params, const GridSpec& grid) {
  validate(params);
  const auto st = build_stencils(grid);
  const Eigen::MatrixXd D1 = grid.s_points.asDiagonal();
  const Eigen::MatrixXd D2 = grid.v_points.asDiagonal();
  const Matrix I1 = Matrix::Identity(grid.m1, grid.m1);
  const Matrix I2 = Matrix::Identity(grid.m2, grid.m2);

  OperatorSet ops;
  ops.m1 = grid.m1;
  ops.m2 = grid.m2;
  ops.A1 = params.r * kron(I2, D1 * st.L1);
  ops.A2 = params.kappa * kron(Matrix((params.eta * I2 - D2) * st.L2), I1);
  ops.A3 = 0.5 * kron(D2, Matrix(D1 * D1 * st.M1));
  ops.A4 = params.rho * params.sigma * kron(Matrix(D2 * st.L2), Matrix(D1 * st.L1));
  ops.A5 = 0.5 * params.sigma * params.sigma * kron(Matrix(D2 * st.M2), I1);
  ops.diffusion = ops.A3 + ops.A4 + ops.A5;
  ops.A = ops.A1 + ops.A2 + ops.diffusion - params.r * Matrix::Identity(grid.m(), grid.m());
  return ops;
}

/// max-norm of 1/2 (M1 D1 - D1 M1) - L1, which vanishes in exact arithmetic.
inline double commutator_check(const GridSpec& grid) {
  const auto st = build_stencils(grid);
  const Matrix D1 = grid.s_points.asDiagonal();
  return (0.5 * (st.M1 * D1 - D1 * st.M1) - st.L1).cwiseAbs().maxCoeff();
}

/// The s-direction matrices obtained after symmetrizing with D1^{1/2}.
struct TransformedOperators {
  Matrix tL1;  ///< D1^{1/2} L1 D1^{1/2}
  Matrix tM1;  ///< D1^{3/2} M1 D1^{1/2}
  Matrix Cs;   ///< D1 L1
  Matrix Css;  ///< 1/2 D1^2 M1

  double antisymmetry_residual = 0;  ///< max |tL1 + tL1^T|
  double similarity_residual = 0;    ///< max |1/2(tM1 + tM1^T) - D1^{-1/2}(2Css + Cs)D1^{1/2}|
};

inline TransformedOperators transformed_operators(const GridSpec& grid) {
  const auto st = build_stencils(grid);
  const Eigen::VectorXd sq = grid.s_points.cwiseSqrt();
  const Matrix D1 = grid.s_points.asDiagonal();
  const Matrix Dh = sq.asDiagonal();
  const Matrix Dh_inv = sq.cwiseInverse().asDiagonal();

  TransformedOperators out;
  out.tL1 = Dh * st.L1 * Dh;
  out.tM1 = D1 * Dh * st.M1 * Dh;
  out.Cs = D1 * st.L1;
  out.Css = 0.5 * D1 * D1 * st.M1;

  out.antisymmetry_residual = (out.tL1 + out.tL1.transpose()).cwiseAbs().maxCoeff();
  const Matrix sym = 0.5 * (out.tM1 + out.tM1.transpose());
  const Matrix via_c = Dh_inv * (2 * out.Css + out.Cs) * Dh;
  out.similarity_residual = (sym - via_c).cwiseAbs().maxCoeff();

  const double scale = std::max(1.0, sym.cwiseAbs().maxCoeff());
  if (out.antisymmetry_residual > 1e-10 * scale || out.similarity_residual > 1e-10 * scale) {
    throw NumericalError("transformed s-operators violate their structural identities (residuals " +
                         std::to_string(out.antisymmetry_residual) + ", " +
                         std::to_string(out.similarity_residual) + ")");
  }
  return out;
}

/// Number of entries with |a_ij| > 0.
template <typename Derived>
Eigen::Index nonzeros(const Eigen::MatrixBase<Derived>& a) {
  return (a.array() != typename Derived::Scalar(0)).count();
}

/// Dense text dump: one row per line, entries separated by a space, 17 significant digits.
template <typename Derived>
void write_matrix(std::ostream& os, const Eigen::MatrixBase<Derived>& a) {
  char buf[32];
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(a(i, j)));
      if (j > 0) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace hestonfd
