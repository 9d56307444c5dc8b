// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hestonfd/experiments.hpp"
#include "hestonfd/stability.hpp"
#include "oracles.hpp"

using namespace hestonfd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Tracks the worst margin over a set of checks.
struct Tally {
  long count = 0;
  long failed = 0;
  double worst = std::numeric_limits<double>::infinity();
  std::string worst_name;
  std::string first_failure;

  void add(const BoundCheck& c) {
    ++count;
    if (!c.holds) {
      if (failed == 0) first_failure = c.name;
      ++failed;
    }
    if (c.margin + c.tol < worst) {
      worst = c.margin + c.tol;
      worst_name = c.name;
    }
  }
  void add(const std::vector<BoundCheck>& cs) {
    for (const auto& c : cs) add(c);
  }
  bool ok() const { return failed == 0 && count > 0; }
  std::string summary() const {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%ld checks, %ld failed, min slack %.3e (%s)%s%s", count, failed, worst,
                  worst_name.c_str(), failed ? "; first failure: " : "", first_failure.c_str());
    return buf;
  }
};

const std::vector<SweepRecord>& default_sweep() {
  static const std::vector<SweepRecord> records = run_sweep(SweepConfig::defaults());
  return records;
}

Outcome criterion_1() {
  Tally t;
  HestonParams p;
  p.r = 0.05;
  p.kappa = 2;
  double prev1 = -1, prev2 = -1;
  for (int m : {3, 7, 15, 31}) {
    const auto g = make_grid(p, m, m);
    const auto c = check_theorem_2_1(build_operators(p, g), p);
    t.add(make_check("|mu2[A1]-sharp| m=" + std::to_string(m), std::abs(c.mu_a1 - c.sharp_a1), 1e-8, 0));
    t.add(make_check("|mu2[A2]-sharp| m=" + std::to_string(m), std::abs(c.mu_a2 - c.sharp_a2), 1e-8, 0));
    t.add(make_check("mu2[A1] increasing m=" + std::to_string(m), prev1, c.mu_a1, 0));
    t.add(make_check("mu2[A2] increasing m=" + std::to_string(m), prev2, c.mu_a2, 0));
    t.add(make_check("mu2[A1]<r/2 m=" + std::to_string(m), c.mu_a1, p.r / 2, 0));
    t.add(make_check("mu2[A2]<kappa/2 m=" + std::to_string(m), c.mu_a2, p.kappa / 2, 0));
    prev1 = c.mu_a1;
    prev2 = c.mu_a2;
  }
  return {t.ok(), t.summary()};
}

Outcome criterion_2() {
  Tally t;
  const std::vector<double> ts{0, 0.5, 1, 2, 5, 10};
  int combos = 0;
  for (double sigma : {0.1, 0.2})
    for (double rho : {-1.0, -0.5, 0.0, 0.5, 1.0})
      for (double L : {0.0, 10.0})
        for (int m2 : {5, 9, 13}) {
          HestonParams p;
          p.sigma = sigma, p.rho = rho, p.L = L, p.S = 800, p.V = 5;
          const auto g = make_grid(p, 2 * m2, m2);
          const auto c = check_theorem_2_3(build_operators(p, g), g, ts, {}, 1e-8);
          t.add(c.log_norm);
          t.add(c.scaled);
          ++combos;
        }
  return {t.ok(), std::to_string(combos) + " combinations; " + t.summary()};
}

Outcome criterion_3() {
  Tally t;
  for (const auto& r : default_sweep()) {
    const std::string tag = " L=" + std::to_string(r.L) + " sigma=" + std::to_string(r.sigma) +
                            " rho=" + std::to_string(r.rho) + " m2=" + std::to_string(r.m2);
    t.add(make_check("case ran" + tag, r.error.empty() && r.converged ? 0.0 : 1.0, 0.0, 0));
    t.add(make_check("max_norm2<=bound" + tag, r.max_norm2, r.bound, 1e-6));
  }
  return {t.ok(), std::to_string(default_sweep().size()) + " records; " + t.summary()};
}

Outcome criterion_4() {
  const auto& recs = default_sweep();
  Tally a, b, c;
  a.add(compare_L_effect(recs, 0.0));
  const auto fits = growth_fits(recs);
  b.add(growth_checks(fits, 0.25));
  for (const auto& r : recs) {
    c.add(make_check("t_argmax>=0", 0.0, r.t_argmax, 0));
    c.add(make_check("t_argmax<=5", r.t_argmax, 5.0, 0));
  }
  double max_slope0 = -1e9, max_slope10 = -1e9;
  for (const auto& f : fits) {
    double& slot = f.L == 0 ? max_slope0 : max_slope10;
    slot = std::max(slot, f.slope);
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "(a) %s | (b) max slope L=0 %.3f, L=10 %.3f, %ld failed | (c) %s", a.summary().c_str(),
                max_slope0, max_slope10, b.failed, c.summary().c_str());
  return {a.ok() && b.ok() && c.ok(), buf};
}

Outcome criterion_5() {
  Tally t;
  double min_lemma_margin = std::numeric_limits<double>::infinity();
  long low_nu_rows = 0;
  const auto cfg = SweepConfig::defaults();
  int grids = 0;
  for (double L : cfg.L_values)
    for (double sigma : cfg.sigma_values)
      for (double rho : cfg.rho_values)
        for (int m2 : cfg.m2_values) {
          HestonParams p;
          p.sigma = sigma, p.rho = rho, p.L = L;
          const auto g = make_grid(p, cfg.m1_factor * m2, m2);
          const auto cond = check_condition_2_3_to_2_5(p, g, 64, default_y_samples());
          t.add(cond.c25);
          for (double y : default_y_samples()) {
            const auto cert = certificate(g, y);
            t.add(cert.all());
            for (const auto& row : cert.rows)
              if (row.i > 1 && row.i < g.m1 && row.nu < 2) ++low_nu_rows;
          }
          const auto pm = build_proof_matrix_B(p, g);
          const auto lemma = check_lemma_2_2(pm.B0, pm.B1, g.m2, 64);
          t.add(lemma.check);
          min_lemma_margin = std::min(min_lemma_margin, lemma.check.margin);
          ++grids;
        }
  // The interior-row inequalities assume nu >= 2; count any row outside that range.
  t.add(make_check("interior rows with nu<2", double(low_nu_rows), 0.0, 0));
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d grids; min lemma margin %.3e; ", grids, min_lemma_margin);
  return {t.ok(), buf + t.summary()};
}

Outcome criterion_6() {
  Tally t;
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 10; ++k) {
    const Matrix a = oracle::random_matrix(rng, 6, 6);
    const Matrix ref = oracle::taylor_expm(a, 1.0, 60);
    const double err = (expm(a, 1.0) - ref).cwiseAbs().maxCoeff() / std::max(1.0, ref.cwiseAbs().maxCoeff());
    t.add(make_check("expm vs Taylor #" + std::to_string(k), err, 1e-10, 0));
  }
  SpectralOptions power_svd;
  power_svd.strategy = EigenStrategy::power_iteration;
  EigenOptions power_eig;
  power_eig.strategy = EigenStrategy::power_iteration;
  for (int n : {2, 5, 8, 16, 32}) {
    const std::string tag = " n=" + std::to_string(n);
    const Matrix a = oracle::random_matrix(rng, n, n);
    const double sref = oracle::jacobi_spectral_norm(a.cast<std::complex<double>>());
    t.add(make_check("spectral_norm" + tag, std::abs(spectral_norm(a).value - sref), 1e-8, 0));
    t.add(make_check("spectral_norm power" + tag, std::abs(spectral_norm(a, power_svd).value - sref), 1e-8, 0));
    const ComplexMatrix c = oracle::random_complex_matrix(rng, n, n);
    const ComplexMatrix h = (c + c.adjoint()) / 2.0;
    const double lref = oracle::jacobi_lambda_max(h);
    t.add(make_check("lambda_max" + tag, std::abs(lambda_max_hermitian(h).value - lref), 1e-8, 0));
    t.add(make_check("lambda_max power" + tag, std::abs(lambda_max_hermitian(h, power_eig).value - lref), 1e-8, 0));
  }
  // Commutator identity on every grid used above and in the sweep.
  for (double L : {0.0, 10.0})
    for (int m1 : {3, 7, 10, 15, 18, 22, 26, 30, 31}) {
      HestonParams p;
      p.L = L;
      t.add(make_check("commutator L=" + std::to_string(L) + " m1=" + std::to_string(m1),
                       commutator_check(make_grid(p, m1, 3)), 1e-10, 0));
    }
  return {t.ok(), t.summary()};
}

Outcome criterion_7() {
  Tally t;
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) {
    const Matrix a = oracle::random_matrix(rng, 10, 10);
    const double omega = log_norm_2(a).value;
    for (double s : {0.1, 1.0, 5.0})
      t.add(make_check("#" + std::to_string(k) + " t=" + std::to_string(s), norm_expm(a, s), std::exp(s * omega), 1e-8));
  }
  return {t.ok(), t.summary()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"C1 advection log-norm sharpness", criterion_1},
      {"C2 diffusion contractivity in the D-norm", criterion_2},
      {"C3 spectral-norm bound on the default sweep", criterion_3},
      {"C4 L effect, growth slopes, argmax location", criterion_4},
      {"C5 certificate chain on every sweep grid", criterion_5},
      {"C6 kernel oracles", criterion_6},
      {"C7 exponential bound from the log-norm", criterion_7},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s [%.1fs]: %s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
