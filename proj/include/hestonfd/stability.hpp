#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hestonfd/error.hpp"
#include "hestonfd/grid.hpp"
#include "hestonfd/linalg.hpp"
#include "hestonfd/operators.hpp"

namespace hestonfd {

/// One inequality lhs <= rhs evaluated numerically. Checks of the form
/// x >= 0 are stored as 0 <= x.
struct BoundCheck {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  double margin = 0;  ///< rhs - lhs
  double tol = 0;
  bool holds = false;  ///< margin >= -tol
};

inline BoundCheck make_check(std::string name, double lhs, double rhs, double tol) {
  BoundCheck c{std::move(name), lhs, rhs, rhs - lhs, tol, false};
  c.holds = c.margin >= -tol;
  return c;
}

inline bool all_hold(const std::vector<BoundCheck>& checks) {
  for (const auto& c : checks)
    if (!c.holds) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Advection parts

struct AdvectionChecks {
  BoundCheck a1;        ///< mu_2[A1] <= r/2
  BoundCheck a2;        ///< mu_2[A2] <= kappa/2
  BoundCheck a1_sharp;  ///< |mu_2[A1] - (r/2)cos(pi/(m1+1))| <= 1e-8
  BoundCheck a2_sharp;  ///< |mu_2[A2] - (kappa/2)cos(pi/(m2+1))| <= 1e-8
  double mu_a1 = 0;
  double mu_a2 = 0;
  double sharp_a1 = 0;
  double sharp_a2 = 0;

  std::vector<BoundCheck> all() const { return {a1, a2, a1_sharp, a2_sharp}; }
};

inline AdvectionChecks check_theorem_2_1(const OperatorSet& ops, const HestonParams& params,
                                         const EigenOptions& opt = {}) {
  AdvectionChecks out;
  const auto r1 = log_norm_2(ops.A1, opt);
  const auto r2 = log_norm_2(ops.A2, opt);
  if (!r1.converged || !r2.converged) throw NumericalError("advection log-norm did not converge");
  out.mu_a1 = r1.value;
  out.mu_a2 = r2.value;
  out.sharp_a1 = 0.5 * params.r * std::cos(std::numbers::pi / (ops.m1 + 1));
  out.sharp_a2 = 0.5 * params.kappa * std::cos(std::numbers::pi / (ops.m2 + 1));
  out.a1 = make_check("mu2[A1]<=r/2", out.mu_a1, 0.5 * params.r, 1e-10 * std::max(1.0, params.r));
  out.a2 = make_check("mu2[A2]<=kappa/2", out.mu_a2, 0.5 * params.kappa, 1e-10 * std::max(1.0, params.kappa));
  out.a1_sharp = make_check("mu2[A1]=sharp", std::abs(out.mu_a1 - out.sharp_a1), 1e-8, 0.0);
  out.a2_sharp = make_check("mu2[A2]=sharp", std::abs(out.mu_a2 - out.sharp_a2), 1e-8, 0.0);
  return out;
}

/// ||e^{tA}||_2 <= K e^{t omega} at each sampled t.
inline std::vector<BoundCheck> check_exp_bound(const Matrix& a, double omega, double K,
                                               const std::vector<double>& t_samples, double tol = 1e-8) {
  std::vector<BoundCheck> out;
  for (double t : t_samples) {
    if (!(t >= 0)) throw ValidationError("check_exp_bound: t samples must be >= 0");
    const double lhs = norm_expm(a, t);
    out.push_back(make_check("exp-bound t=" + std::to_string(t), lhs, K * std::exp(t * omega), tol));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Diffusion part

/// sqrt(s_m1 v_m2 / (s_1 v_1)), the factor between the D-norm and the 2-norm.
inline double scaled_norm_factor(const GridSpec& grid) {
  return std::sqrt(grid.s_points(grid.m1 - 1) * grid.v_points(grid.m2 - 1) / (grid.s_points(0) * grid.v_points(0)));
}

struct DiffusionChecks {
  BoundCheck log_norm;              ///< mu_D[A3+A4+A5] <= 0
  std::vector<BoundCheck> scaled;   ///< ||e^{t(A3+A4+A5)}||_D <= 1
  std::vector<BoundCheck> spectral; ///< ||e^{t(A3+A4+A5)}||_2 <= scaled_norm_factor

  std::vector<BoundCheck> all() const {
    std::vector<BoundCheck> v{log_norm};
    v.insert(v.end(), scaled.begin(), scaled.end());
    v.insert(v.end(), spectral.begin(), spectral.end());
    return v;
  }
};

inline DiffusionChecks check_theorem_2_3(const OperatorSet& ops, const GridSpec& grid,
                                         const std::vector<double>& t_samples, const EigenOptions& opt = {},
                                         double norm_tol = 1e-8) {
  if (ops.m1 != grid.m1 || ops.m2 != grid.m2) throw ValidationError("check_theorem_2_3: operators do not match grid");
  const auto d = scaling_matrices(grid).d;
  DiffusionChecks out;
  const auto mu = log_norm_D(ops.diffusion, d, opt);
  if (!mu.converged) throw NumericalError("mu_D of the diffusion part did not converge");
  const double scale = std::max(1.0, ops.diffusion.cwiseAbs().maxCoeff());
  out.log_norm = make_check("muD[A3+A4+A5]<=0", mu.value, 0.0, 1e-8 * scale);
  const double factor = scaled_norm_factor(grid);
  for (double t : t_samples) {
    if (!(t >= 0)) throw ValidationError("check_theorem_2_3: t samples must be >= 0");
    const Matrix e = expm(ops.diffusion, t);
    const auto nd = matrix_norm(e, d);
    const auto n2 = matrix_norm(e, std::nullopt);
    const std::string ts = std::to_string(t);
    out.scaled.push_back(make_check("||exp||_D<=1 t=" + ts, nd.value, 1.0, norm_tol));
    out.spectral.push_back(make_check("||exp||_2<=factor t=" + ts, n2.value, factor, norm_tol));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Block Toeplitz symbol

inline void require_unit(std::complex<double> zeta) {
  if (std::abs(std::abs(zeta) - 1.0) > 1e-12) throw ValidationError("symbol evaluation requires |zeta| = 1");
}

/// B(zeta) = B0 + zeta B1 + zeta^{-1} B1^T.
inline ComplexMatrix symbol_matrix(const Matrix& b0, const Matrix& b1, std::complex<double> zeta) {
  require_unit(zeta);
  if (b0.rows() != b0.cols() || b0.rows() != b1.rows() || b1.rows() != b1.cols())
    throw ValidationError("symbol_matrix: blocks must be square and of equal size");
  return b0.cast<std::complex<double>>() + zeta * b1.cast<std::complex<double>>() +
         (1.0 / zeta) * b1.transpose().cast<std::complex<double>>();
}

/// B0 + 2 zeta B1, whose Hermitian part equals that of B(zeta).
inline ComplexMatrix symbol_matrix_hat(const Matrix& b0, const Matrix& b1, std::complex<double> zeta) {
  require_unit(zeta);
  if (b0.rows() != b0.cols() || b0.rows() != b1.rows() || b1.rows() != b1.cols())
    throw ValidationError("symbol_matrix_hat: blocks must be square and of equal size");
  return b0.cast<std::complex<double>>() + 2.0 * zeta * b1.cast<std::complex<double>>();
}

inline std::complex<double> root_of_unity(int k, int n) {
  return std::polar(1.0, 2 * std::numbers::pi * k / n);
}

/// I (x) B0 + E (x) B1 + E^T (x) B1^T with n_blocks diagonal blocks.
inline Matrix block_toeplitz(const Matrix& b0, const Matrix& b1, int n_blocks) {
  const Matrix e = shift_matrix(n_blocks);
  return kron(Matrix::Identity(n_blocks, n_blocks), b0) + kron(e, b1) + kron(Matrix(e.transpose()), Matrix(b1.transpose()));
}

struct LemmaCheck {
  BoundCheck check;         ///< mu_2[B] <= sampled max of mu_2[B0 + 2 zeta B1]
  double mu_block = 0;      ///< mu_2[B]
  double sampled_max = 0;
  double sampling_slack = 0;  ///< bound on how far the true max can exceed the sampled one
};

inline LemmaCheck check_lemma_2_2(const Matrix& b0, const Matrix& b1, int n_blocks, int zeta_samples,
                                  const EigenOptions& opt = {}) {
  if (n_blocks < 2) throw ValidationError("check_lemma_2_2: n_blocks must be >= 2");
  if (zeta_samples < 8) throw ValidationError("check_lemma_2_2: zeta_samples must be >= 8");
  LemmaCheck out;
  out.mu_block = log_norm_2(block_toeplitz(b0, b1, n_blocks), opt).value;
  out.sampled_max = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < zeta_samples; ++k)
    out.sampled_max = std::max(out.sampled_max, log_norm_2(symbol_matrix_hat(b0, b1, root_of_unity(k, zeta_samples)), opt).value);
  // mu_2[B0 + 2 zeta B1] is 2||B1||_2-Lipschitz in zeta and every point of the
  // circle is within 2 sin(pi/(2N)) of a sample.
  const double b1_norm = spectral_norm(b1).value;
  out.sampling_slack = 2 * b1_norm * 2 * std::sin(std::numbers::pi / (2 * zeta_samples));
  const double scale = std::max({1.0, b0.cwiseAbs().maxCoeff(), b1.cwiseAbs().maxCoeff()});
  out.check = make_check("lemma: mu2[B]<=max mu2[B0+2zB1]", out.mu_block, out.sampled_max,
                         out.sampling_slack + 1e-10 * scale);
  return out;
}

// ---------------------------------------------------------------------------
// Proof matrices

struct ProofMatrices {
  Matrix B;   ///< (D2^{-1} (x) D1^{-1/2}) (A3+A4+A5) (I (x) D1^{1/2})
  Matrix B0;  ///< 1/2 (tM1 - 2 st^2 I)
  Matrix B1;  ///< 1/2 (rho st tL1 + st^2 I), st = sigma/dv
  double mismatch = 0;  ///< max |B - block form|
};

inline ProofMatrices build_proof_matrix_B(const HestonParams& params, const GridSpec& grid) {
  const auto ops = build_operators(params, grid);
  const auto tr = transformed_operators(grid);
  const double st = params.sigma / grid.dv;
  const int m1 = grid.m1;

  ProofMatrices out;
  out.B = ops.diffusion;
  for (int col = 0; col < grid.m(); ++col)
    for (int row = 0; row < grid.m(); ++row) {
      const double left = 1.0 / (grid.v_points(row / m1) * std::sqrt(grid.s_points(row % m1)));
      out.B(row, col) *= left * std::sqrt(grid.s_points(col % m1));
    }
  const Matrix I1 = Matrix::Identity(m1, m1);
  out.B0 = 0.5 * (tr.tM1 - 2 * st * st * I1);
  out.B1 = 0.5 * (params.rho * st * tr.tL1 + st * st * I1);
  const Matrix block = block_toeplitz(out.B0, out.B1, grid.m2);
  out.mismatch = (out.B - block).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, out.B.cwiseAbs().maxCoeff());
  if (out.mismatch > 1e-10 * scale) {
    throw NumericalError("proof matrix B: similarity form and block form differ by " + std::to_string(out.mismatch));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sufficient conditions on the s-direction matrices

namespace detail {

/// Largest eigenvalue of a matrix that becomes Hermitian under D1^{-1/2} (.) D1^{1/2}.
inline double lambda_max_via_d1(const ComplexMatrix& m, const Eigen::VectorXd& s, const EigenOptions& opt) {
  return lambda_max_hermitian(diagonal_similarity(m, s), opt).value;
}

inline double entry_scale(const ComplexMatrix& m) { return std::max(1.0, m.cwiseAbs().maxCoeff()); }

}  // namespace detail

/// Default sampled y values for the s-direction condition.
inline std::vector<double> default_y_samples() {
  return {0.0, 0.1, -0.1, 0.25, -0.25, 0.49, -0.49, 0.5, -0.5, 0.6, -0.6, 1.0, -1.0, 5.0, -5.0};
}

struct ConditionChecks {
  std::vector<BoundCheck> c23;  ///< per zeta sample
  std::vector<BoundCheck> c24;  ///< per zeta sample
  std::vector<BoundCheck> c25;  ///< per y sample
  bool sign_agreement = true;   ///< c23[k].holds == c24[k].holds for all k
  double max_equivalence_gap = 0;  ///< max |lhs23 - 2 lhs24|

  std::vector<BoundCheck> all() const {
    std::vector<BoundCheck> v = c23;
    v.insert(v.end(), c24.begin(), c24.end());
    v.insert(v.end(), c25.begin(), c25.end());
    return v;
  }
};

inline ConditionChecks check_condition_2_3_to_2_5(const HestonParams& params, const GridSpec& grid, int zeta_samples,
                                                  const std::vector<double>& y_samples, const EigenOptions& opt = {}) {
  validate(params);
  if (zeta_samples < 8) throw ValidationError("zeta_samples must be >= 8");
  const auto tr = transformed_operators(grid);
  const double st = params.sigma / grid.dv;
  const std::complex<double> I(0, 1);
  const ComplexMatrix sym_tm1 = (0.5 * (tr.tM1 + tr.tM1.transpose())).cast<std::complex<double>>();
  const ComplexMatrix tl1 = tr.tL1.cast<std::complex<double>>();
  const ComplexMatrix cs = tr.Cs.cast<std::complex<double>>();
  const ComplexMatrix css = tr.Css.cast<std::complex<double>>();

  ConditionChecks out;
  for (int k = 0; k < zeta_samples; ++k) {
    const auto zeta = root_of_unity(k, zeta_samples);
    const std::string tag = " zeta=e^(2pi i " + std::to_string(k) + "/" + std::to_string(zeta_samples) + ")";

    const ComplexMatrix m23 = sym_tm1 + 2.0 * I * zeta.imag() * params.rho * st * tl1;
    const double lhs23 = lambda_max_hermitian(m23, opt).value;
    const double rhs23 = 2 * st * st * (1 - zeta.real());
    out.c23.push_back(make_check("cond23" + tag, lhs23, rhs23, 1e-8 * detail::entry_scale(m23)));

    const ComplexMatrix m24 = css + 0.5 * cs + I * zeta.imag() * params.rho * st * cs;
    const double lhs24 = detail::lambda_max_via_d1(m24, grid.s_points, opt);
    const double rhs24 = st * st * (1 - zeta.real());
    out.c24.push_back(make_check("cond24" + tag, lhs24, rhs24, 1e-8 * detail::entry_scale(m24)));

    out.max_equivalence_gap = std::max(out.max_equivalence_gap, std::abs(lhs23 - 2 * lhs24));
    if (out.c23.back().holds != out.c24.back().holds) out.sign_agreement = false;
  }
  for (double y : y_samples) {
    if (!std::isfinite(y)) throw ValidationError("y samples must be finite");
    const ComplexMatrix m25 = css + (0.5 + 2.0 * I * y) * cs;
    const double lhs = detail::lambda_max_via_d1(m25, grid.s_points, opt);
    out.c25.push_back(make_check("cond25 y=" + std::to_string(y), lhs, 2 * y * y, 1e-8 * detail::entry_scale(m25)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Row-wise certificates for the s-direction condition

/// One row of the tridiagonal family Css + (1/2 + 2iy)Cs = tridiag(beta, alpha, gamma).
/// Quantities that do not apply to a row are NaN.
struct CertificateRow {
  int i = 0;  ///< 1-based row
  double nu = 0;
  double eps = std::numeric_limits<double>::quiet_NaN();  ///< weight ratio, rows i >= 2
  double a = std::numeric_limits<double>::quiet_NaN();
  double b = std::numeric_limits<double>::quiet_NaN();
  double alpha = 0;
  double beta_mag = 0;
  double gamma_mag = 0;
  double theta = std::numeric_limits<double>::quiet_NaN();
  double y = 0;
  std::optional<std::complex<double>> zeta;
  double row_value = 0;  ///< the row sum entering mu_inf
};

struct Certificate {
  std::vector<CertificateRow> rows;
  std::vector<BoundCheck> row_checks;
  BoundCheck overall;       ///< mu_inf of the (weighted) family <= 2y^2
  BoundCheck assembly;      ///< assembled matrix row sums agree with the row formulas
  BoundCheck eigen_bound;   ///< lambda_max <= mu_inf

  std::vector<BoundCheck> all() const {
    std::vector<BoundCheck> v = row_checks;
    v.push_back(overall);
    v.push_back(assembly);
    v.push_back(eigen_bound);
    return v;
  }
};

namespace detail {

inline double row_tol(double nu, double theta = 0) { return 1e-12 * std::max(1.0, nu * nu + theta); }

inline std::complex<double> beta_entry(double nu, double y) {
  return 0.5 * nu * std::complex<double>(nu - 0.5, -2 * y);
}
inline std::complex<double> gamma_entry(double nu, double y) {
  return 0.5 * nu * std::complex<double>(nu + 0.5, 2 * y);
}

/// Css + (1/2 + 2iy)Cs assembled from the stencil matrices.
inline ComplexMatrix condition_family(const TransformedOperators& tr, double y) {
  return tr.Css.cast<std::complex<double>>() + std::complex<double>(0.5, 2 * y) * tr.Cs.cast<std::complex<double>>();
}

inline std::vector<double> grid_nu(const GridSpec& grid) {
  std::vector<double> nu(grid.m1);
  for (int i = 0; i < grid.m1; ++i) nu[i] = grid.s_points(i) / grid.ds;
  return nu;
}

/// `family` is the matrix whose mu_inf is certified; `plain` is the unweighted
/// family, which becomes Hermitian under the D1^{1/2} similarity.
inline Certificate finish_certificate(Certificate cert, const ComplexMatrix& family, const ComplexMatrix& plain,
                                      double row_max, const GridSpec& grid, double y, const EigenOptions& opt) {
  const double two_y2 = 2 * y * y;
  const double mu_inf = log_norm_inf(family);
  const double scale = std::max(1.0, family.cwiseAbs().maxCoeff());
  cert.overall = make_check("mu_inf<=2y^2", mu_inf, two_y2, 1e-12 * scale);
  cert.assembly = make_check("mu_inf=row formula", std::abs(mu_inf - row_max), 0.0, 1e-12 * scale);
  const double lam = lambda_max_via_d1(plain, grid.s_points, opt);
  cert.eigen_bound = make_check("lambda_max<=mu_inf", lam, mu_inf, 1e-10 * scale);
  return cert;
}

}  // namespace detail

/// Row certificate for |y| >= 1/2, where mu_inf of the unweighted family suffices.
inline Certificate certificate_case_large_y(const GridSpec& grid, double y, const EigenOptions& opt = {}) {
  if (!(std::abs(y) >= 0.5)) throw ValidationError("certificate_case_large_y requires |y| >= 1/2");
  const auto nu = detail::grid_nu(grid);
  const int m1 = grid.m1;
  const double theta = 4 * y * y;
  const double two_y2 = 2 * y * y;

  Certificate cert;
  double row_max = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= m1; ++i) {
    const double v = nu[i - 1];
    CertificateRow row;
    row.i = i;
    row.nu = v;
    row.y = y;
    row.theta = theta;
    row.alpha = -v * v;
    row.beta_mag = i == 1 ? 0.0 : std::abs(detail::beta_entry(v, y));
    row.gamma_mag = i == m1 ? 0.0 : std::abs(detail::gamma_entry(v, y));
    row.row_value = row.alpha + row.beta_mag + row.gamma_mag;
    row_max = std::max(row_max, row.row_value);

    const double tol = detail::row_tol(v, theta);
    const std::string tag = " i=" + std::to_string(i) + " y=" + std::to_string(y);
    cert.row_checks.push_back(make_check("row<=2y^2" + tag, row.row_value, two_y2, tol));
    const double quartic = 4 * theta * (theta - 1) * std::pow(v, 4) + theta * theta * (4 * theta - 1) * v * v +
                           std::pow(theta, 4);
    cert.row_checks.push_back(make_check("quartic>=0" + tag, 0.0, quartic, tol));
    cert.rows.push_back(row);
  }
  const auto tr = transformed_operators(grid);
  const ComplexMatrix family = detail::condition_family(tr, y);
  return detail::finish_certificate(std::move(cert), family, family, row_max, grid, y, opt);
}

/// Closed form of a_i under the weights eps_j = (nu_j - 1/2)(nu_j + 1/2)/nu_j^2.
inline double certificate_a_closed(double nu) { return -0.125 * (nu - 0.75) / (nu * (nu + 1.5)); }

/// nu^3 - 3/4 nu^2 - 3/2 nu - 9/16, nonnegative exactly when 2a + b <= 1.
inline double certificate_cubic(double nu) { return nu * nu * nu - 0.75 * nu * nu - 1.5 * nu - 0.5625; }

inline double certificate_eps(double nu) { return (nu - 0.5) * (nu + 0.5) / (nu * nu); }

/// Row certificate for |y| < 1/2 using the diagonal similarity with weight
/// ratios eps_i. Interior rows are checked through a_i and b_i, the first and
/// last rows directly.
inline Certificate certificate_case_small_y(const GridSpec& grid, double y, const EigenOptions& opt = {}) {
  if (!(std::abs(y) < 0.5)) throw ValidationError("certificate_case_small_y requires |y| < 1/2");
  if (grid.m1 < 3) throw ValidationError("certificate_case_small_y requires m1 >= 3");
  const auto nu = detail::grid_nu(grid);
  const int m1 = grid.m1;
  const double two_y2 = 2 * y * y;
  auto eps_at = [&](int j) { return certificate_eps(nu[j - 1]); };  // 2 <= j <= m1

  Certificate cert;
  double row_max = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= m1; ++i) {
    const double v = nu[i - 1];
    CertificateRow row;
    row.i = i;
    row.nu = v;
    row.y = y;
    row.alpha = -v * v;
    row.beta_mag = i == 1 ? 0.0 : std::abs(detail::beta_entry(v, y));
    row.gamma_mag = i == m1 ? 0.0 : std::abs(detail::gamma_entry(v, y));
    if (i >= 2) row.eps = eps_at(i);
    const double tol = detail::row_tol(v);
    const std::string tag = " i=" + std::to_string(i) + " y=" + std::to_string(y);

    if (i == 1) {
      row.row_value = row.alpha + row.gamma_mag / eps_at(2);
      cert.row_checks.push_back(make_check("first row<=2y^2" + tag, row.row_value, two_y2, tol));
    } else if (i == m1) {
      row.row_value = row.alpha + row.eps * row.beta_mag;
      cert.row_checks.push_back(make_check("last row<=2y^2" + tag, row.row_value, two_y2, tol));
    } else {
      const double e_next = eps_at(i + 1);
      row.row_value = row.alpha + row.eps * row.beta_mag + row.gamma_mag / e_next;
      const double a_bracket = 0.5 * v * (-2 * v + row.eps * (v - 0.5) + (v + 0.5) / e_next);
      row.b = 0.5 * v * (row.eps / (v - 0.5) + 1.0 / (e_next * (v + 0.5)));
      row.a = certificate_a_closed(v);
      const double bound = row.a + row.b * two_y2;
      cert.row_checks.push_back(make_check("a closed=bracket" + tag, std::abs(row.a - a_bracket), 1e-12, 0.0));
      cert.row_checks.push_back(make_check("a<=0" + tag, row.a, 0.0, 0.0));
      cert.row_checks.push_back(make_check("2a+b<=1" + tag, 2 * row.a + row.b, 1.0, 1e-14));
      cert.row_checks.push_back(make_check("cubic>=0" + tag, 0.0, certificate_cubic(v), 0.0));
      cert.row_checks.push_back(make_check("row<=a+b*2y^2" + tag, row.row_value, bound, tol));
      cert.row_checks.push_back(make_check("a+b*2y^2<=2y^2" + tag, bound, two_y2, 1e-14));
    }
    row_max = std::max(row_max, row.row_value);
    cert.rows.push_back(row);
  }

  // Weighted family: entry (i, i-1) scaled by eps_i and (i, i+1) by 1/eps_{i+1}.
  const auto tr = transformed_operators(grid);
  const ComplexMatrix plain = detail::condition_family(tr, y);
  ComplexMatrix family = plain;
  for (int i = 2; i <= m1; ++i) {
    family(i - 1, i - 2) *= eps_at(i);
    family(i - 2, i - 1) /= eps_at(i);
  }
  return detail::finish_certificate(std::move(cert), family, plain, row_max, grid, y, opt);
}

/// Dispatches on |y| to the matching certificate.
inline Certificate certificate(const GridSpec& grid, double y, const EigenOptions& opt = {}) {
  return std::abs(y) >= 0.5 ? certificate_case_large_y(grid, y, opt) : certificate_case_small_y(grid, y, opt);
}

}  // namespace hestonfd
