#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <type_traits>

#include <Eigen/Dense>

#include "hestonfd/error.hpp"

namespace hestonfd {

enum class NormMethod { power_iteration, direct_small, pade_expm };

inline const char* to_string(NormMethod m) {
  switch (m) {
    case NormMethod::power_iteration: return "power-iteration";
    case NormMethod::direct_small: return "direct-small";
    case NormMethod::pade_expm: return "pade-expm";
  }
  return "?";
}

/// A computed norm or extreme eigenvalue together with how it was obtained.
/// `residual` is the estimated error of `value` relative to the tolerance scale;
/// `converged` holds exactly when residual <= tolerance.
struct NormReport {
  double value = 0;
  NormMethod method = NormMethod::power_iteration;
  int iterations = 0;
  double residual = 0;
  bool converged = true;
};

enum class EigenStrategy {
  automatic,        ///< dense solve up to direct_max_dim, power iteration above
  power_iteration,  ///< always iterate
  direct,           ///< always dense
};

struct EigenOptions {
  double tolerance = 1e-10;
  int iteration_factor = 50;  ///< iteration cap is iteration_factor * dimension
  EigenStrategy strategy = EigenStrategy::automatic;
  Eigen::Index direct_max_dim = 2000;
  /// Finish with a dense solve when power iteration hits its cap; if false,
  /// the report comes back with converged = false.
  bool fallback_to_direct = true;
};

/// Spectral-norm options. The automatic strategy uses a dense SVD up to
/// direct_max_dim: for e^{tA} with small t the leading singular values cluster
/// near 1 and power iteration cannot reach the tolerance.
struct SpectralOptions {
  double tolerance = 1e-10;
  int iteration_factor = 50;
  EigenStrategy strategy = EigenStrategy::automatic;
  Eigen::Index direct_max_dim = 2000;
  bool fallback_to_direct = true;

  bool operator==(const SpectralOptions&) const = default;
};

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> start_vector(Eigen::Index n) {
  std::mt19937_64 rng(0x5eedULL + static_cast<unsigned long long>(n));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = Scalar(1.0 + 0.5 * u(rng));
  return x.normalized();
}

/// Power iteration for the largest eigenvalue of a positive semidefinite
/// Hermitian operator given by `apply`. The Rayleigh quotient increases
/// monotonically; the stopping rule extrapolates the geometric tail of the
/// increments. A small eigen-residual is not used: with clustered eigenvalues
/// it only locates some eigenvalue, not the largest.
/// `tol_abs` is an absolute tolerance on the eigenvalue.
template <typename Vector, typename Apply>
NormReport power_psd(Apply&& apply, Eigen::Index n, double tol_abs, int max_iter) {
  using Scalar = typename Vector::Scalar;
  NormReport rep;
  rep.method = NormMethod::power_iteration;
  Vector x = start_vector<Scalar>(n);
  double prev = -1, prev_inc = -1, prev_q = -1;
  for (int k = 1; k <= max_iter; ++k) {
    Vector w = apply(x);
    const double rq = std::real(x.dot(w));
    rep.value = rq;
    rep.iterations = k;
    double err = std::numeric_limits<double>::infinity();
    if (prev >= 0) {
      const double inc = std::max(0.0, rq - prev);
      double q = -1;
      if (prev_inc > 0 && inc < prev_inc) {
        q = inc / prev_inc;
        // Trust the tail estimate only once the ratio has settled; increments
        // at roundoff level give a noisy ratio and never qualify.
        if (prev_q >= 0 && std::abs(q - prev_q) <= 0.1 * (1 - q)) err = inc * q / (1 - q);
      } else if (inc == 0 && prev_inc == 0) {
        err = 0;
      }
      prev_q = q;
      prev_inc = inc;
    }
    prev = rq;
    rep.residual = err;
    if (err <= tol_abs) {
      rep.converged = true;
      return rep;
    }
    const double wn = w.norm();
    if (wn == 0) {  // x in the null space; value 0 is exact for a PSD operator
      rep.residual = 0;
      rep.converged = true;
      return rep;
    }
    x = w / wn;
  }
  rep.converged = false;
  return rep;
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Largest eigenvalue of a Hermitian matrix.
template <typename Derived>
NormReport lambda_max_hermitian(const Eigen::MatrixBase<Derived>& h, const EigenOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (h.rows() != h.cols() || h.rows() == 0) throw ValidationError("lambda_max_hermitian: matrix must be square and non-empty");
  const double hmax = detail::max_abs(h);
  if (!std::isfinite(hmax)) throw ValidationError("lambda_max_hermitian: non-finite entries");
  const double asym = detail::max_abs(h - h.adjoint());
  if (asym > 1e-12 * hmax) {
    throw ValidationError("lambda_max_hermitian: matrix is not Hermitian (max |H - H*| = " + std::to_string(asym) + ")");
  }
  const Eigen::Index n = h.rows();
  const double tol_abs = opt.tolerance * std::max(1.0, hmax);

  auto direct = [&](int iterations) {
    NormReport rep;
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(h), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("lambda_max_hermitian: dense eigensolver failed");
    rep.value = es.eigenvalues()(n - 1);
    rep.method = NormMethod::direct_small;
    rep.iterations = iterations;
    rep.residual = 0;
    rep.converged = true;
    return rep;
  };

  const bool use_direct = opt.strategy == EigenStrategy::direct ||
                          (opt.strategy == EigenStrategy::automatic && n <= opt.direct_max_dim);
  if (use_direct) return direct(0);

  // Shift by the Gershgorin lower bound so that H + cI is positive semidefinite.
  double lower = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double off = h.row(i).cwiseAbs().sum() - std::abs(h(i, i));
    lower = std::min(lower, std::real(h(i, i)) - off);
  }
  const double c = std::max(0.0, -lower);
  const Mat hm = h;
  auto apply = [&](const Vec& x) -> Vec { return hm * x + c * x; };
  NormReport rep = detail::power_psd<Vec>(apply, n, tol_abs, opt.iteration_factor * static_cast<int>(n));
  rep.value -= c;
  rep.residual /= std::max(1.0, hmax);
  if (!rep.converged && opt.fallback_to_direct) return direct(rep.iterations);
  return rep;
}

/// Largest singular value, computed as sqrt(lambda_max(A* A)).
template <typename Derived>
NormReport spectral_norm(const Eigen::MatrixBase<Derived>& a, const SpectralOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (a.size() == 0) return NormReport{};
  const double amax = detail::max_abs(a);
  if (!std::isfinite(amax)) throw ValidationError("spectral_norm: non-finite entries");
  if (amax == 0) return NormReport{0.0, NormMethod::direct_small, 0, 0, true};

  auto direct = [&](int iterations) {
    Eigen::BDCSVD<Mat> svd(a);
    return NormReport{svd.singularValues()(0), NormMethod::direct_small, iterations, 0, true};
  };
  const bool use_direct = opt.strategy == EigenStrategy::direct ||
                          (opt.strategy == EigenStrategy::automatic && std::max(a.rows(), a.cols()) <= opt.direct_max_dim);
  if (use_direct) return direct(0);

  // Normalize so the tolerance is relative to ||A||.
  const Mat an = a / amax;
  auto apply = [&](const Vec& x) -> Vec { return an.adjoint() * (an * x); };
  const int cap = opt.iteration_factor * static_cast<int>(std::max(a.rows(), a.cols()));
  // sigma^2 = lambda: a relative tolerance tol on sigma is about 2*tol on lambda.
  // The value is first located, then the tolerance is made relative to it.
  NormReport rep = detail::power_psd<Vec>(apply, a.cols(), 0.0, 3);
  const double tol_abs = 2 * opt.tolerance * std::max(rep.value, std::numeric_limits<double>::min());
  rep = detail::power_psd<Vec>(apply, a.cols(), tol_abs, cap);
  const double lam = std::max(rep.value, 0.0);
  rep.value = amax * std::sqrt(lam);
  rep.residual = lam > 0 ? rep.residual / (2 * lam) : 0.0;
  rep.converged = rep.converged && rep.residual <= opt.tolerance;
  if (!rep.converged && opt.fallback_to_direct) return direct(rep.iterations);
  return rep;
}

/// Logarithmic spectral norm: the largest eigenvalue of the Hermitian part.
template <typename Derived>
NormReport log_norm_2(const Eigen::MatrixBase<Derived>& a, const EigenOptions& opt = {}) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.rows() != a.cols()) throw ValidationError("log_norm_2: matrix must be square");
  const Mat h = (a + a.adjoint()) / 2.0;
  return lambda_max_hermitian(h, opt);
}

/// D^{-1/2} A D^{1/2} for a positive diagonal given by its entries.
template <typename Derived>
auto diagonal_similarity(const Eigen::MatrixBase<Derived>& a, const Eigen::VectorXd& d) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.rows() != a.cols() || d.size() != a.rows()) throw ValidationError("diagonal_similarity: dimension mismatch");
  if (!(d.array() > 0).all()) throw ValidationError("diagonal_similarity: scaling diagonal must be positive");
  const Eigen::VectorXd sq = d.cwiseSqrt();
  Mat out = a;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) *= sq(j) / sq(i);
  return out;
}

/// mu_D[A] = mu_2[D^{-1/2} A D^{1/2}].
template <typename Derived>
NormReport log_norm_D(const Eigen::MatrixBase<Derived>& a, const Eigen::VectorXd& d, const EigenOptions& opt = {}) {
  return log_norm_2(diagonal_similarity(a, d), opt);
}

/// Logarithmic maximum norm: max_i (Re a_ii + sum_{j != i} |a_ij|).
template <typename Derived>
double log_norm_inf(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() != a.cols()) throw ValidationError("log_norm_inf: matrix must be square");
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double row = std::real(a(i, i));
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (j != i) row += std::abs(a(i, j));
    best = std::max(best, row);
  }
  return best;
}

/// e^{tA} by scaling and squaring with the [13/13] Pade approximant. The
/// scaling makes the 1-norm of the argument at most 1.
template <typename Derived>
auto expm(const Eigen::MatrixBase<Derived>& a, double t = 1.0) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.rows() != a.cols()) throw ValidationError("expm: matrix must be square");
  if (!std::isfinite(t) || t < 0) throw ValidationError("expm: t must be finite and >= 0");
  const Eigen::Index n = a.rows();
  const Mat id = Mat::Identity(n, n);
  if (t == 0 || n == 0) return Mat(id);

  Mat x = t * a;
  const double norm1 = x.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm1)) throw NumericalError("expm: argument has non-finite entries");
  int squarings = 0;
  if (norm1 > 1) squarings = static_cast<int>(std::ceil(std::log2(norm1)));
  if (squarings > 0) x /= std::ldexp(1.0, squarings);

  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  const Mat x2 = x * x;
  const Mat x4 = x2 * x2;
  const Mat x6 = x4 * x2;
  Mat inner = b[13] * x6 + b[11] * x4 + b[9] * x2;
  Mat u_arg = x6 * inner;
  u_arg += b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id;
  const Mat u = x * u_arg;
  inner = b[12] * x6 + b[10] * x4 + b[8] * x2;
  Mat v = x6 * inner;
  v += b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;

  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) {
    r = r * r;
    if (!r.allFinite()) {
      throw NumericalError("expm: overflow while squaring (t = " + std::to_string(t) +
                           ", ||tA||_1 = " + std::to_string(norm1) + ")");
    }
  }
  if (!r.allFinite()) throw NumericalError("expm: non-finite result (t = " + std::to_string(t) + ")");
  return r;
}

/// ||M||_2, or ||M||_D = ||D^{-1/2} M D^{1/2}||_2 when d is given.
template <typename Derived>
NormReport matrix_norm(const Eigen::MatrixBase<Derived>& m, const std::optional<Eigen::VectorXd>& d,
                       const SpectralOptions& opt = {}) {
  if (d) return spectral_norm(diagonal_similarity(m, *d), opt);
  return spectral_norm(m, opt);
}

/// Norm of e^{tA}. The similarity is applied to the exponential, not its argument.
template <typename Derived>
NormReport norm_expm_report(const Eigen::MatrixBase<Derived>& a, double t,
                            const std::optional<Eigen::VectorXd>& d = std::nullopt,
                            const SpectralOptions& opt = {}) {
  NormReport rep = matrix_norm(expm(a, t), d, opt);
  rep.method = NormMethod::pade_expm;
  return rep;
}

template <typename Derived>
double norm_expm(const Eigen::MatrixBase<Derived>& a, double t, const std::optional<Eigen::VectorXd>& d = std::nullopt,
                 const SpectralOptions& opt = {}) {
  return norm_expm_report(a, t, d, opt).value;
}

}  // namespace hestonfd
