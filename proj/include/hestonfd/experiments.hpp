#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "hestonfd/error.hpp"
#include "hestonfd/grid.hpp"
#include "hestonfd/linalg.hpp"
#include "hestonfd/operators.hpp"
#include "hestonfd/stability.hpp"

namespace hestonfd {

struct MaxNormResult {
  double max_value = 0;
  double t_argmax = 0;
  bool converged = true;           ///< every norm evaluation converged
  std::vector<double> level_max;   ///< running maximum after the coarse pass and each refinement
};

struct MaxNormOptions {
  double t_max = 100;
  double coarse_step = 1;
  int refine_levels = 2;
  SpectralOptions spectral{};

  bool operator==(const MaxNormOptions&) const = default;
};

/// Upper bound on ||M||_2 (or ||M||_D): the smaller of sqrt(||M||_1 ||M||_inf)
/// and the Frobenius norm.
inline double norm_upper_bound(const Matrix& m, const std::optional<Eigen::VectorXd>& d) {
  const Matrix scaled = d ? Matrix(diagonal_similarity(m, *d)) : m;
  const Matrix abs = scaled.cwiseAbs();
  const double one_inf = std::sqrt(abs.colwise().sum().maxCoeff() * abs.rowwise().sum().maxCoeff());
  return std::min(one_inf, scaled.norm());
}

namespace detail {

/// Bound c with ||X||_k <= c ||X||_j for the scaled norms given by d_k and d_j
/// (absent means the plain 2-norm): the condition number of the diagonal
/// between the two similarities.
inline double norm_equivalence(const std::optional<Eigen::VectorXd>& dk, const std::optional<Eigen::VectorXd>& dj,
                               Eigen::Index n) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::ArrayXd ratio = (dk ? *dk : ones).array() / (dj ? *dj : ones).array();
  return std::sqrt(ratio.maxCoeff() / ratio.minCoeff());
}

}  // namespace detail

/// Joint version of max_norm_over_t for several norms of the same e^{tA}.
/// The coarse scan is shared; each norm then gets its own refinement around
/// its own argmax.
///
/// The coarse scan stops before t_max only when that cannot change any
/// result: if some scaled norm j has q = ||e^{step A}||_j <= 1, then every later
/// coarse value obeys ||e^{tA}||_k <= c_kj ub_j q^n, with ub_j a cheap bound
/// at the current point.
inline std::vector<MaxNormResult> max_norms_over_t(const Matrix& a,
                                                   const std::vector<std::optional<Eigen::VectorXd>>& norms,
                                                   const MaxNormOptions& opt = {}) {
  if (!(opt.t_max > 0) || !(opt.coarse_step > 0)) throw ValidationError("max_norm_over_t: t_max and coarse_step must be > 0");
  if (opt.refine_levels < 0) throw ValidationError("max_norm_over_t: refine_levels must be >= 0");
  if (norms.empty()) throw ValidationError("max_norms_over_t: no norms requested");
  const std::size_t nn = norms.size();
  std::vector<MaxNormResult> out(nn);
  for (auto& r : out) r.max_value = -1;

  auto evaluate = [&](std::size_t k, const Matrix& p, double t) {
    if (!p.allFinite()) throw NumericalError("max_norm_over_t: e^{tA} overflowed at t = " + std::to_string(t));
    // A cheap upper bound at or below the running maximum cannot change the
    // result, so the exact norm is skipped.
    if (out[k].max_value >= 0 && norm_upper_bound(p, norms[k]) <= out[k].max_value) return;
    const auto rep = matrix_norm(p, norms[k], opt.spectral);
    out[k].converged = out[k].converged && rep.converged;
    if (rep.value > out[k].max_value) {
      out[k].max_value = rep.value;
      out[k].t_argmax = t;
    }
  };

  // Coarse pass, shared by all norms.
  const int count = static_cast<int>(std::floor(opt.t_max / opt.coarse_step + 1e-9));
  {
    const Matrix e = expm(a, opt.coarse_step);
    std::vector<double> q(nn, std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < nn; ++j)
      if (norms[j]) q[j] = matrix_norm(e, norms[j], opt.spectral).value;
    std::vector<std::vector<double>> equiv(nn, std::vector<double>(nn));
    for (std::size_t k = 0; k < nn; ++k)
      for (std::size_t j = 0; j < nn; ++j) equiv[k][j] = detail::norm_equivalence(norms[k], norms[j], a.rows());

    Matrix p = Matrix::Identity(a.rows(), a.cols());
    for (int step = 0; step <= count; ++step) {
      const double t = step * opt.coarse_step;
      for (std::size_t k = 0; k < nn; ++k) evaluate(k, p, t);
      if (step == count) break;
      bool done = false;
      for (std::size_t j = 0; j < nn && !done; ++j) {
        if (!(q[j] <= 1)) continue;
        const double tail = norm_upper_bound(p, norms[j]) * q[j];  // q^n <= q for n >= 1
        done = true;
        for (std::size_t k = 0; k < nn; ++k) done = done && equiv[k][j] * tail <= out[k].max_value;
      }
      if (done) break;
      p = p * e;
    }
    for (auto& r : out) r.level_max.push_back(r.max_value);
  }

  for (std::size_t k = 0; k < nn; ++k) {
    double step = opt.coarse_step;
    for (int level = 0; level < opt.refine_levels; ++level) {
      const double lo = std::max(0.0, out[k].t_argmax - step);
      const double hi = std::min(opt.t_max, out[k].t_argmax + step);
      step /= 10;
      const int n = static_cast<int>(std::lround((hi - lo) / step));
      Matrix p = expm(a, lo);
      const Matrix e = expm(a, step);
      for (int i = 0; i <= n; ++i) {
        evaluate(k, p, lo + i * step);
        if (i < n) p = p * e;
      }
      out[k].level_max.push_back(out[k].max_value);
    }
  }
  return out;
}

/// Estimates max_{0 <= t <= t_max} ||e^{tA}|| (2-norm, or D-norm when d is
/// given). A coarse scan is followed by refine_levels passes, each covering
/// [t* - step, t* + step] around the current argmax with a ten times smaller
/// step. Within a pass the exponentials are advanced by multiplying with
/// e^{step A}.
inline MaxNormResult max_norm_over_t(const Matrix& a, const std::optional<Eigen::VectorXd>& d,
                                     const MaxNormOptions& opt = {}) {
  return max_norms_over_t(a, {d}, opt).front();
}

/// sqrt((L + m1 S)/(m1 L + S) * m2), equal to scaled_norm_factor of the grid.
inline double sweep_bound(double L, double S, int m1, int m2) {
  return std::sqrt((L + m1 * S) / (m1 * L + S) * m2);
}

struct SweepConfig {
  std::vector<int> m2_values{5, 7, 9, 11, 13, 15};
  std::vector<double> sigma_values{0.1, 0.2};
  std::vector<double> rho_values{-1.0, 0.0, 1.0};
  std::vector<double> L_values{0.0, 10.0};
  double S = 800;
  double V = 5;
  double r = 0.05;
  double kappa = 2.0;
  double eta = 0.04;
  int m1_factor = 2;  ///< m1 = m1_factor * m2
  MaxNormOptions max_norm{};
  double bound_tol = 1e-6;
  int threads = 1;

  bool operator==(const SweepConfig&) const = default;

  /// m2 = 5, 7, ..., 25 when full, otherwise capped at 15.
  static SweepConfig defaults(bool full = false) {
    SweepConfig c;
    c.m2_values.clear();
    for (int m2 = 5; m2 <= (full ? 25 : 15); m2 += 2) c.m2_values.push_back(m2);
    return c;
  }
};

struct SweepRecord {
  int m2 = 0;
  int m1 = 0;
  double L = 0;
  double sigma = 0;
  double rho = 0;
  double S = 0;
  double V = 0;
  double max_norm2 = 0;
  double t_argmax = 0;
  double max_normD = 0;
  double bound = 0;
  bool within_bound = false;
  bool converged = true;
  std::string error;  ///< empty unless this case failed
};

/// Evaluates one sweep case; failures are recorded in the returned record.
inline SweepRecord run_sweep_case(const SweepConfig& cfg, double L, double sigma, double rho, int m2) {
  SweepRecord rec;
  rec.m2 = m2;
  rec.m1 = cfg.m1_factor * m2;
  rec.L = L;
  rec.sigma = sigma;
  rec.rho = rho;
  rec.S = cfg.S;
  rec.V = cfg.V;
  rec.bound = sweep_bound(L, cfg.S, rec.m1, m2);
  try {
    const HestonParams p{cfg.r, cfg.kappa, cfg.eta, sigma, rho, L, cfg.S, cfg.V};
    const auto grid = make_grid(p, rec.m1, m2);
    const auto ops = build_operators(p, grid);
    const auto res = max_norms_over_t(ops.diffusion, {std::nullopt, scaling_matrices(grid).d}, cfg.max_norm);
    const auto& n2 = res[0];
    const auto& nd = res[1];
    rec.max_norm2 = n2.max_value;
    rec.t_argmax = n2.t_argmax;
    rec.max_normD = nd.max_value;
    rec.converged = n2.converged && nd.converged;
    rec.within_bound = rec.max_norm2 <= rec.bound + cfg.bound_tol;
  } catch (const Error& e) {
    rec.error = e.what();
    rec.max_norm2 = rec.t_argmax = rec.max_normD = std::numeric_limits<double>::quiet_NaN();
    rec.within_bound = false;
    rec.converged = false;
  }
  return rec;
}

/// Runs every (L, sigma, rho, m2) combination; records come back sorted by that key.
inline std::vector<SweepRecord> run_sweep(const SweepConfig& cfg) {
  auto sorted = [](auto v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto Ls = sorted(cfg.L_values);
  const auto sigmas = sorted(cfg.sigma_values);
  const auto rhos = sorted(cfg.rho_values);
  const auto m2s = sorted(cfg.m2_values);

  std::vector<std::tuple<double, double, double, int>> cases;
  for (double L : Ls)
    for (double sigma : sigmas)
      for (double rho : rhos)
        for (int m2 : m2s) cases.emplace_back(L, sigma, rho, m2);

  std::vector<SweepRecord> out(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cases.size(); k = next++) {
      const auto& [L, sigma, rho, m2] = cases[k];
      out[k] = run_sweep_case(cfg, L, sigma, rho, m2);
    }
  };
  const int n_threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(cases.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  return out;
}

/// For every (sigma, rho, m2), checks that each larger L gives a maximum no
/// larger than the smallest L does.
inline std::vector<BoundCheck> compare_L_effect(const std::vector<SweepRecord>& records, double tol = 1e-8) {
  std::map<std::tuple<double, double, int>, std::map<double, double>> by_key;
  std::vector<double> Ls;
  for (const auto& r : records) {
    by_key[{r.sigma, r.rho, r.m2}][r.L] = r.max_norm2;
    Ls.push_back(r.L);
  }
  std::sort(Ls.begin(), Ls.end());
  Ls.erase(std::unique(Ls.begin(), Ls.end()), Ls.end());
  if (Ls.size() < 2) throw ValidationError("compare_L_effect: records need at least two distinct L values");

  std::string missing;
  for (const auto& [key, per_L] : by_key)
    for (double L : Ls)
      if (!per_L.count(L)) {
        const auto& [sigma, rho, m2] = key;
        missing += " (sigma=" + std::to_string(sigma) + ", rho=" + std::to_string(rho) + ", m2=" +
                   std::to_string(m2) + ", L=" + std::to_string(L) + ")";
      }
  if (!missing.empty()) throw ValidationError("compare_L_effect: unmatched combinations:" + missing);

  std::vector<BoundCheck> out;
  for (const auto& [key, per_L] : by_key) {
    const auto& [sigma, rho, m2] = key;
    const double base = per_L.at(Ls.front());
    for (std::size_t k = 1; k < Ls.size(); ++k) {
      const std::string name = "L=" + std::to_string(Ls[k]) + " vs L=" + std::to_string(Ls.front()) +
                               " sigma=" + std::to_string(sigma) + " rho=" + std::to_string(rho) +
                               " m2=" + std::to_string(m2);
      out.push_back(make_check(name, per_L.at(Ls[k]), base, tol));
    }
  }
  return out;
}

struct GrowthFit {
  double sigma = 0;
  double rho = 0;
  double L = 0;
  double slope = 0;  ///< least-squares slope of log(max_norm2) against log(m2)
  int points = 0;
};

inline std::vector<GrowthFit> growth_fits(const std::vector<SweepRecord>& records) {
  std::map<std::tuple<double, double, double>, std::vector<std::pair<double, double>>> series;
  for (const auto& r : records)
    if (r.error.empty()) series[{r.L, r.sigma, r.rho}].emplace_back(std::log(double(r.m2)), std::log(r.max_norm2));
  std::vector<GrowthFit> out;
  for (const auto& [key, pts] : series) {
    const auto& [L, sigma, rho] = key;
    GrowthFit fit{sigma, rho, L, std::numeric_limits<double>::quiet_NaN(), static_cast<int>(pts.size())};
    if (pts.size() >= 2) {
      double mx = 0, my = 0;
      for (const auto& [x, y] : pts) mx += x, my += y;
      mx /= pts.size();
      my /= pts.size();
      double sxy = 0, sxx = 0;
      for (const auto& [x, y] : pts) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
      fit.slope = sxy / sxx;
    }
    out.push_back(fit);
  }
  return out;
}

/// Slope limits: proportional to m2 (slope 1) for L = 0 and to sqrt(m2)
/// (slope 1/2) for L > 0, each with the given slack.
inline std::vector<BoundCheck> growth_checks(const std::vector<GrowthFit>& fits, double slack = 0.25) {
  std::vector<BoundCheck> out;
  for (const auto& f : fits) {
    const double limit = (f.L == 0 ? 1.0 : 0.5) + slack;
    out.push_back(make_check("growth slope L=" + std::to_string(f.L) + " sigma=" + std::to_string(f.sigma) +
                                 " rho=" + std::to_string(f.rho),
                             f.slope, limit, 0.0));
  }
  return out;
}

}  // namespace hestonfd
