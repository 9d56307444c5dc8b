#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "hestonfd/error.hpp"

namespace hestonfd {

/// Coefficients of the Heston PDE together with the truncated domain
/// [L, S] x [0, V].
struct HestonParams {
  double r = 0.05;      ///< interest rate
  double kappa = 2.0;   ///< mean-reversion rate
  double eta = 0.04;    ///< long-term mean of the variance
  double sigma = 0.2;   ///< volatility of variance
  double rho = 0.0;     ///< correlation, in [-1, 1]
  double L = 0.0;       ///< lower barrier in s
  double S = 800.0;     ///< truncation in s
  double V = 5.0;       ///< truncation in v

  bool operator==(const HestonParams&) const = default;
};

/// Throws ValidationError unless every coefficient lies in its admissible range.
inline void validate(const HestonParams& p) {
  auto fail = [](const std::string& what) { throw ValidationError("invalid Heston parameters: " + what); };
  auto finite = std::isfinite(p.r) && std::isfinite(p.kappa) && std::isfinite(p.eta) && std::isfinite(p.sigma) &&
                std::isfinite(p.rho) && std::isfinite(p.L) && std::isfinite(p.S) && std::isfinite(p.V);
  if (!finite) fail("all values must be finite");
  if (!(p.r > 0)) fail("r must be > 0");
  if (!(p.kappa > 0)) fail("kappa must be > 0");
  if (!(p.eta > 0)) fail("eta must be > 0");
  if (!(p.sigma > 0)) fail("sigma must be > 0");
  if (!(p.rho >= -1 && p.rho <= 1)) fail("rho must lie in [-1, 1]");
  if (!(p.L >= 0)) fail("L must be >= 0");
  if (!(p.S > p.L)) fail("S must exceed L");
  if (!(p.V > 0)) fail("V must be > 0");
}

/// Uniform interior grid on (L, S) x (0, V). Boundary nodes are not stored.
///
/// Unknowns are ordered lexicographically with the s-index running fastest:
/// the 1-based node (i, j) has flat 0-based index (j-1)*m1 + (i-1).
struct GridSpec {
  int m1 = 0;
  int m2 = 0;
  double ds = 0;
  double dv = 0;
  Eigen::VectorXd s_points;  ///< s_i = L + i*ds, i = 1..m1
  Eigen::VectorXd v_points;  ///< v_j = j*dv, j = 1..m2

  int m() const { return m1 * m2; }
  int flat_index(int i, int j) const { return (j - 1) * m1 + (i - 1); }
};

inline GridSpec make_grid(const HestonParams& params, int m1, int m2) {
  validate(params);
  if (m1 < 3 || m2 < 3) {
    throw ValidationError("grid needs m1 >= 3 and m2 >= 3 (got m1=" + std::to_string(m1) +
                          ", m2=" + std::to_string(m2) + ")");
  }
  GridSpec g;
  g.m1 = m1;
  g.m2 = m2;
  g.ds = (params.S - params.L) / (m1 + 1);
  g.dv = params.V / (m2 + 1);
  g.s_points.resize(m1);
  g.v_points.resize(m2);
  for (int i = 1; i <= m1; ++i) g.s_points(i - 1) = params.L + i * g.ds;
  for (int j = 1; j <= m2; ++j) g.v_points(j - 1) = j * g.dv;
  return g;
}

/// Diagonals of D1 = diag(s), D2 = diag(v) and D = D2 (x) D1.
struct ScalingMatrices {
  Eigen::VectorXd d1;
  Eigen::VectorXd d2;
  Eigen::VectorXd d;
};

inline ScalingMatrices scaling_matrices(const GridSpec& grid) {
  ScalingMatrices out{grid.s_points, grid.v_points, Eigen::VectorXd(grid.m())};
  for (int j = 0; j < grid.m2; ++j)
    for (int i = 0; i < grid.m1; ++i) out.d(j * grid.m1 + i) = grid.v_points(j) * grid.s_points(i);
  return out;
}

}  // namespace hestonfd
