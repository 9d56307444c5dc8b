#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hestonfd/error.hpp"
#include "hestonfd/experiments.hpp"
#include "hestonfd/grid.hpp"
#include "hestonfd/operators.hpp"
#include "hestonfd/stability.hpp"

namespace hestonfd::cli {

enum ExitCode : int { ok = 0, check_failed = 1, usage_error = 2, numerical_failure = 3 };

/// Malformed command line; the message includes usage text.
class UsageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// --help was given; what() holds the help text.
class HelpRequested : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

enum class Command { operators, check, certificate, sweep };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::operators: return "operators";
    case Command::check: return "check";
    case Command::certificate: return "certificate";
    case Command::sweep: return "sweep";
  }
  return "?";
}

struct RunConfig {
  Command command = Command::check;
  HestonParams params{};
  int m2 = 5;
  std::optional<int> m1;  ///< defaults to 2*m2
  std::string output;     ///< empty: standard output
  std::string dump;       ///< operators: matrix to dump
  std::string plot_dir;   ///< sweep: directory for series files
  std::vector<double> t_samples{0, 0.5, 1, 2, 5, 10};
  std::vector<double> y_samples = default_y_samples();
  int zeta_samples = 64;
  double eig_tol = 1e-10;
  double norm_tol = 1e-8;
  SweepConfig sweep = SweepConfig::defaults();
  bool full = false;

  int grid_m1() const { return m1 ? *m1 : 2 * m2; }
  bool operator==(const RunConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Formatting

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ',';
    if constexpr (std::is_floating_point_v<T>) s += fmt17(v[k]);
    else s += std::to_string(v[k]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline void add_scalar_params(CLI::App* sub, HestonParams& p, bool with_sigma_rho_L) {
  sub->add_option("--r", p.r, "interest rate");
  sub->add_option("--kappa", p.kappa, "mean-reversion rate");
  sub->add_option("--eta", p.eta, "long-term mean of the variance");
  if (with_sigma_rho_L) {
    sub->add_option("--sigma", p.sigma, "volatility of variance");
    sub->add_option("--rho", p.rho, "correlation in [-1, 1]");
    sub->add_option("--L", p.L, "lower barrier");
  }
  sub->add_option("--S", p.S, "truncation in s");
  sub->add_option("--V", p.V, "truncation in v");
}

}  // namespace detail

/// Parses argv (argv[0] is the program name).
inline RunConfig parse_args(const std::vector<std::string>& argv) {
  RunConfig cfg;
  CLI::App app{"Stability analysis of the central finite difference discretization of the Heston PDE"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "show help for all subcommands");

  auto* ops = app.add_subcommand("operators", "assemble the semi-discrete operators and optionally dump one");
  auto* chk = app.add_subcommand("check", "verify the advection and diffusion stability bounds for one case");
  auto* cert = app.add_subcommand("certificate", "evaluate the sufficient conditions and row certificates");
  auto* swp = app.add_subcommand("sweep", "estimate max_t ||e^{t(A3+A4+A5)}||_2 over the parameter sweep");

  int m1 = 0;
  for (auto* sub : {ops, chk, cert}) {
    detail::add_scalar_params(sub, cfg.params, true);
    sub->add_option("--m2", cfg.m2, "interior points in v")->check(CLI::PositiveNumber);
    sub->add_option("--m1", m1, "interior points in s (default 2*m2)")->check(CLI::PositiveNumber);
    sub->add_option("--eig-tol", cfg.eig_tol, "eigenvalue tolerance");
    sub->add_option("-o,--output", cfg.output, "output file (default: standard output)");
  }
  ops->add_option("--dump", cfg.dump, "matrix to dump: A, A1..A5, diffusion")
      ->check(CLI::IsMember({"A", "A1", "A2", "A3", "A4", "A5", "diffusion"}));
  chk->add_option("--t", cfg.t_samples, "t samples")->delimiter(',');
  chk->add_option("--norm-tol", cfg.norm_tol, "tolerance for norm bounds");
  cert->add_option("--y", cfg.y_samples, "y samples")->delimiter(',');
  cert->add_option("--zeta-samples", cfg.zeta_samples, "number of roots of unity")->check(CLI::Range(8, 1 << 20));

  auto& sw = cfg.sweep;
  detail::add_scalar_params(swp, cfg.params, false);
  auto* m2_list = swp->add_option("--m2-list", sw.m2_values, "m2 values")->delimiter(',');
  swp->add_option("--sigma-list", sw.sigma_values, "sigma values")->delimiter(',');
  swp->add_option("--rho-list", sw.rho_values, "rho values")->delimiter(',');
  swp->add_option("--L-list", sw.L_values, "lower barrier values")->delimiter(',');
  auto* full = swp->add_flag("--full", cfg.full, "m2 = 5, 7, ..., 25 (m up to 1250)");
  full->excludes(m2_list);
  swp->add_option("--t-max", sw.max_norm.t_max, "end of the coarse t scan");
  swp->add_option("--coarse-step", sw.max_norm.coarse_step, "coarse t step");
  swp->add_option("--refine-levels", sw.max_norm.refine_levels, "refinement passes");
  swp->add_option("--bound-tol", sw.bound_tol, "tolerance for the spectral-norm bound");
  swp->add_option("--threads", sw.threads, "worker threads")->check(CLI::PositiveNumber);
  swp->add_option("-o,--output", cfg.output, "CSV output file (default: standard output)");
  swp->add_option("--plot-dir", cfg.plot_dir, "directory for per-series plot data");

  std::vector<const char*> raw;
  for (const auto& a : argv) raw.push_back(a.c_str());
  if (raw.empty()) raw.push_back("hestonfd");
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\n\n" + app.help());
  }

  if (ops->parsed()) cfg.command = Command::operators;
  if (chk->parsed()) cfg.command = Command::check;
  if (cert->parsed()) cfg.command = Command::certificate;
  if (swp->parsed()) cfg.command = Command::sweep;
  if (m1 > 0) cfg.m1 = m1;

  if (cfg.command == Command::sweep) {
    if (cfg.full) sw.m2_values = SweepConfig::defaults(true).m2_values;
    sw.S = cfg.params.S;
    sw.V = cfg.params.V;
    sw.r = cfg.params.r;
    sw.kappa = cfg.params.kappa;
    sw.eta = cfg.params.eta;
    if (sw.m2_values.empty() || sw.sigma_values.empty() || sw.rho_values.empty() || sw.L_values.empty())
      throw UsageError("sweep lists must not be empty\n\n" + swp->help());
    for (int m2 : sw.m2_values)
      if (m2 < 3) throw ValidationError("sweep: m2 values must be >= 3");
    for (double sigma : sw.sigma_values)
      for (double rho : sw.rho_values)
        for (double L : sw.L_values) {
          HestonParams p = cfg.params;
          p.sigma = sigma, p.rho = rho, p.L = L;
          validate(p);
        }
  } else {
    validate(cfg.params);
    if (cfg.m2 < 3 || cfg.grid_m1() < 3) throw ValidationError("grid needs m1 >= 3 and m2 >= 3");
  }
  return cfg;
}

/// Canonical command line for cfg; parsing it yields cfg again.
inline std::vector<std::string> canonical_args(const RunConfig& cfg) {
  std::vector<std::string> a{"hestonfd", to_string(cfg.command)};
  auto add = [&](const std::string& flag, const std::string& value) {
    a.push_back(flag);
    a.push_back(value);
  };
  const auto& p = cfg.params;
  add("--r", fmt17(p.r));
  add("--kappa", fmt17(p.kappa));
  add("--eta", fmt17(p.eta));
  if (cfg.command != Command::sweep) {
    add("--sigma", fmt17(p.sigma));
    add("--rho", fmt17(p.rho));
    add("--L", fmt17(p.L));
  }
  add("--S", fmt17(p.S));
  add("--V", fmt17(p.V));
  if (!cfg.output.empty()) add("--output", cfg.output);
  switch (cfg.command) {
    case Command::operators:
    case Command::check:
    case Command::certificate:
      add("--m2", std::to_string(cfg.m2));
      if (cfg.m1) add("--m1", std::to_string(*cfg.m1));
      add("--eig-tol", fmt17(cfg.eig_tol));
      if (cfg.command == Command::operators && !cfg.dump.empty()) add("--dump", cfg.dump);
      if (cfg.command == Command::check) {
        add("--t", join(cfg.t_samples));
        add("--norm-tol", fmt17(cfg.norm_tol));
      }
      if (cfg.command == Command::certificate) {
        add("--y", join(cfg.y_samples));
        add("--zeta-samples", std::to_string(cfg.zeta_samples));
      }
      break;
    case Command::sweep: {
      const auto& s = cfg.sweep;
      if (cfg.full) a.push_back("--full");
      else add("--m2-list", join(s.m2_values));
      add("--sigma-list", join(s.sigma_values));
      add("--rho-list", join(s.rho_values));
      add("--L-list", join(s.L_values));
      add("--t-max", fmt17(s.max_norm.t_max));
      add("--coarse-step", fmt17(s.max_norm.coarse_step));
      add("--refine-levels", std::to_string(s.max_norm.refine_levels));
      add("--bound-tol", fmt17(s.bound_tol));
      add("--threads", std::to_string(s.threads));
      if (!cfg.plot_dir.empty()) add("--plot-dir", cfg.plot_dir);
      break;
    }
  }
  return a;
}

inline std::string canonical_string(const RunConfig& cfg) {
  std::string s;
  for (const auto& part : canonical_args(cfg)) {
    if (!s.empty()) s += ' ';
    s += part;
  }
  return s;
}

// ---------------------------------------------------------------------------
// CSV output

inline const char* csv_bool(bool b) { return b ? "true" : "false"; }

inline void write_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
  os << "m2,m1,L,sigma,rho,S,V,max_norm2,t_argmax,max_normD,bound,within_bound\n";
  for (const auto& r : records) {
    os << r.m2 << ',' << r.m1 << ',' << fmt17(r.L) << ',' << fmt17(r.sigma) << ',' << fmt17(r.rho) << ','
       << fmt17(r.S) << ',' << fmt17(r.V) << ',' << fmt17(r.max_norm2) << ',' << fmt17(r.t_argmax) << ','
       << fmt17(r.max_normD) << ',' << fmt17(r.bound) << ',' << csv_bool(r.within_bound) << '\n';
  }
}

inline void write_csv(std::ostream& os, const std::vector<BoundCheck>& checks) {
  os << "name,lhs,rhs,margin,tol,holds\n";
  for (const auto& c : checks) {
    os << c.name << ',' << fmt17(c.lhs) << ',' << fmt17(c.rhs) << ',' << fmt17(c.margin) << ',' << fmt17(c.tol)
       << ',' << csv_bool(c.holds) << '\n';
  }
}

/// Certificate report: one line per row and per check, distinguished by `kind`.
inline void write_certificate_csv(std::ostream& os, const std::vector<CertificateRow>& rows,
                                  const std::vector<BoundCheck>& checks) {
  os << "kind,name,lhs,rhs,margin,holds,i,nu,eps,a,b,alpha,beta_mag,gamma_mag,theta,y\n";
  for (const auto& r : rows) {
    os << "row,row i=" << r.i << ",,,,," << r.i << ',' << fmt17(r.nu) << ',' << fmt17(r.eps) << ',' << fmt17(r.a)
       << ',' << fmt17(r.b) << ',' << fmt17(r.alpha) << ',' << fmt17(r.beta_mag) << ',' << fmt17(r.gamma_mag)
       << ',' << fmt17(r.theta) << ',' << fmt17(r.y) << '\n';
  }
  for (const auto& c : checks) {
    os << "check," << c.name << ',' << fmt17(c.lhs) << ',' << fmt17(c.rhs) << ',' << fmt17(c.margin) << ','
       << csv_bool(c.holds) << ",,,,,,,,,,\n";
  }
}

template <typename Records>
void write_csv(const std::string& path, const Records& records) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  write_csv(f, records);
  f.flush();
  if (!f) throw IoError("failed writing " + path);
}

/// One two-column series file (m2, max_norm2) per (sigma, rho, L) plus an
/// index.csv placing each series on the (rho row, sigma column) panel grid.
/// Returns the series file paths in index order.
inline std::vector<std::filesystem::path> emit_plot_data(const std::vector<SweepRecord>& records,
                                                         const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::map<std::tuple<double, double, double>, std::vector<const SweepRecord*>> series;
  std::set<double> sigmas, rhos;
  for (const auto& r : records) {
    series[{r.sigma, r.rho, r.L}].push_back(&r);
    sigmas.insert(r.sigma);
    rhos.insert(r.rho);
  }
  auto rank = [](const std::set<double>& s, double x) { return static_cast<int>(std::distance(s.begin(), s.find(x))); };

  std::vector<fs::path> files;
  std::ostringstream index;
  index << "file,sigma,rho,L,panel_row,panel_col\n";
  for (auto& [key, recs] : series) {
    const auto& [sigma, rho, L] = key;
    std::sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->m2 < b->m2; });
    const std::string name = "sigma_" + fmt_short(sigma) + "_rho_" + fmt_short(rho) + "_L_" + fmt_short(L) + ".csv";
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw IoError("cannot open " + (dir / name).string());
    f << "m2,max_norm2\n";
    for (const auto* r : recs) f << r->m2 << ',' << fmt17(r->max_norm2) << '\n';
    if (!f) throw IoError("failed writing " + (dir / name).string());
    // Largest rho on the top row, smallest sigma in the left column.
    const int row = static_cast<int>(rhos.size()) - 1 - rank(rhos, rho);
    index << name << ',' << fmt17(sigma) << ',' << fmt17(rho) << ',' << fmt17(L) << ',' << row << ','
          << rank(sigmas, sigma) << '\n';
    files.push_back(dir / name);
  }
  std::ofstream f(dir / "index.csv", std::ios::binary);
  f << index.str();
  if (!f) throw IoError("failed writing " + (dir / "index.csv").string());
  return files;
}

// ---------------------------------------------------------------------------
// Commands

namespace detail {

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw IoError("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void finish(const std::string& path) {
    if (file_.is_open()) {
      file_.flush();
      if (!file_) throw IoError("failed writing " + path);
    }
  }

 private:
  std::ofstream file_;
};

inline void print_checks(std::ostream& log, const std::vector<BoundCheck>& checks) {
  for (const auto& c : checks) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "  [%s] %-48s lhs=% .6e rhs=% .6e margin=% .3e\n", c.holds ? "PASS" : "FAIL",
                  c.name.c_str(), c.lhs, c.rhs, c.margin);
    log << buf;
  }
}

inline int status(const std::vector<BoundCheck>& checks) { return all_hold(checks) ? ok : check_failed; }

inline int run_operators(const RunConfig& cfg, std::ostream& log) {
  const auto grid = make_grid(cfg.params, cfg.grid_m1(), cfg.m2);
  const auto ops = build_operators(cfg.params, grid);
  const int m = grid.m();
  log << "m1=" << grid.m1 << " m2=" << grid.m2 << " m=" << m << " ds=" << fmt17(grid.ds) << " dv=" << fmt17(grid.dv)
      << '\n';
  const std::pair<const char*, const Matrix*> mats[] = {{"A1", &ops.A1}, {"A2", &ops.A2}, {"A3", &ops.A3},
                                                        {"A4", &ops.A4}, {"A5", &ops.A5}, {"A", &ops.A},
                                                        {"diffusion", &ops.diffusion}};
  for (const auto& [name, mat] : mats) log << "  nnz(" << name << ")=" << nonzeros(*mat) << '\n';

  std::vector<BoundCheck> checks;
  checks.push_back(make_check("nnz(A4)<=9m", double(nonzeros(ops.A4)), 9.0 * m, 0));
  for (const auto& [name, mat] : mats) {
    if (std::string(name) == "A4" || std::string(name) == "A" || std::string(name) == "diffusion") continue;
    checks.push_back(make_check(std::string("nnz(") + name + ")<=3m", double(nonzeros(*mat)), 3.0 * m, 0));
  }
  const double comm = commutator_check(grid);
  checks.push_back(make_check("commutator 1/2(M1D1-D1M1)=L1", comm, 0.0,
                              1e-13 * std::max(1.0, 1.0 / (grid.ds * grid.ds))));
  print_checks(log, checks);

  if (!cfg.dump.empty()) {
    Output out(cfg.output);
    for (const auto& [name, mat] : mats)
      if (cfg.dump == name) write_matrix(out.stream(), *mat);
    out.finish(cfg.output);
  }
  return status(checks);
}

inline int run_check(const RunConfig& cfg, std::ostream& log) {
  EigenOptions eo;
  eo.tolerance = cfg.eig_tol;
  const auto grid = make_grid(cfg.params, cfg.grid_m1(), cfg.m2);
  const auto ops = build_operators(cfg.params, grid);
  std::vector<BoundCheck> checks;
  const auto adv = check_theorem_2_1(ops, cfg.params, eo);
  for (const auto& c : adv.all()) checks.push_back(c);
  for (auto c : check_exp_bound(ops.A1, 0.5 * cfg.params.r, 1.0, cfg.t_samples, cfg.norm_tol)) {
    c.name = "A1 " + c.name;
    checks.push_back(c);
  }
  for (auto c : check_exp_bound(ops.A2, 0.5 * cfg.params.kappa, 1.0, cfg.t_samples, cfg.norm_tol)) {
    c.name = "A2 " + c.name;
    checks.push_back(c);
  }
  for (const auto& c : check_theorem_2_3(ops, grid, cfg.t_samples, eo, cfg.norm_tol).all()) checks.push_back(c);
  log << "check m1=" << grid.m1 << " m2=" << grid.m2 << '\n';
  print_checks(log, checks);
  if (!cfg.output.empty()) write_csv(cfg.output, checks);
  return status(checks);
}

inline int run_certificate(const RunConfig& cfg, std::ostream& log) {
  EigenOptions eo;
  eo.tolerance = cfg.eig_tol;
  const auto grid = make_grid(cfg.params, cfg.grid_m1(), cfg.m2);
  std::vector<BoundCheck> checks;
  std::vector<CertificateRow> rows;

  const auto pm = build_proof_matrix_B(cfg.params, grid);
  checks.push_back(make_check("B similarity form = block form", pm.mismatch, 0.0,
                              1e-10 * std::max(1.0, pm.B.cwiseAbs().maxCoeff())));
  const auto lemma = check_lemma_2_2(pm.B0, pm.B1, grid.m2, cfg.zeta_samples, eo);
  checks.push_back(lemma.check);
  const auto cond = check_condition_2_3_to_2_5(cfg.params, grid, cfg.zeta_samples, cfg.y_samples, eo);
  for (const auto& c : cond.all()) checks.push_back(c);
  checks.push_back(make_check("cond23/cond24 sign agreement", cond.sign_agreement ? 0.0 : 1.0, 0.0, 0.0));
  for (double y : cfg.y_samples) {
    const auto c = certificate(grid, y, eo);
    rows.insert(rows.end(), c.rows.begin(), c.rows.end());
    for (const auto& b : c.all()) checks.push_back(b);
  }
  std::size_t failed = 0;
  for (const auto& c : checks) failed += !c.holds;
  log << "certificate m1=" << grid.m1 << " m2=" << grid.m2 << ": " << checks.size() << " checks, " << failed
      << " failed; lemma margin " << fmt17(lemma.check.margin) << '\n';
  for (const auto& c : checks)
    if (!c.holds) print_checks(log, {c});
  if (!cfg.output.empty()) {
    Output out(cfg.output);
    write_certificate_csv(out.stream(), rows, checks);
    out.finish(cfg.output);
  }
  return status(checks);
}

inline int run_sweep_command(const RunConfig& cfg, std::ostream& log) {
  const auto records = run_sweep(cfg.sweep);
  Output out(cfg.output);
  write_csv(out.stream(), records);
  out.finish(cfg.output);
  if (!cfg.plot_dir.empty()) emit_plot_data(records, cfg.plot_dir);

  bool case_failed = false;
  std::vector<BoundCheck> checks;
  for (const auto& r : records) {
    if (!r.error.empty()) {
      log << "case L=" << r.L << " sigma=" << r.sigma << " rho=" << r.rho << " m2=" << r.m2 << " failed: " << r.error
          << '\n';
      case_failed = true;
      continue;
    }
    const std::string tag = " L=" + fmt_short(r.L) + " sigma=" + fmt_short(r.sigma) + " rho=" + fmt_short(r.rho) +
                            " m2=" + std::to_string(r.m2);
    checks.push_back(make_check("max_norm2<=bound" + tag, r.max_norm2, r.bound, cfg.sweep.bound_tol));
    checks.push_back(make_check("max_normD<=1" + tag, r.max_normD, 1.0, 1e-8));
    checks.push_back(make_check("t_argmax<=5" + tag, r.t_argmax, 5.0, 0.0));
  }
  if (!case_failed) {
    std::set<double> Ls;
    std::set<int> m2s;
    for (const auto& r : records) Ls.insert(r.L), m2s.insert(r.m2);
    if (Ls.size() >= 2)
      for (const auto& c : compare_L_effect(records)) checks.push_back(c);
    if (m2s.size() >= 2)
      for (const auto& c : growth_checks(growth_fits(records))) checks.push_back(c);
  }
  std::size_t failed = 0;
  for (const auto& c : checks) failed += !c.holds;
  log << "sweep: " << records.size() << " records, " << checks.size() << " checks, " << failed << " failed\n";
  for (const auto& c : checks)
    if (!c.holds) print_checks(log, {c});
  if (case_failed) return numerical_failure;
  return status(checks);
}

}  // namespace detail

/// Executes a parsed configuration. Diagnostics go to `log`.
inline int run(const RunConfig& cfg, std::ostream& log) {
  switch (cfg.command) {
    case Command::operators: return detail::run_operators(cfg, log);
    case Command::check: return detail::run_check(cfg, log);
    case Command::certificate: return detail::run_certificate(cfg, log);
    case Command::sweep: return detail::run_sweep_command(cfg, log);
  }
  return usage_error;
}

/// Full entry point: parse, run, and map errors to exit codes.
inline int main(const std::vector<std::string>& argv, std::ostream& log) {
  try {
    return run(parse_args(argv), log);
  } catch (const HelpRequested& h) {
    std::cout << h.what();
    return ok;
  } catch (const ValidationError& e) {
    log << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const IoError& e) {
    log << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const NumericalError& e) {
    log << "numerical failure: " << e.what() << '\n';
    return numerical_failure;
  }
}

}  // namespace hestonfd::cli
