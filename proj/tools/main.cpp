// Command-line driver: basis caching, simulation runs, splitting and
// sensitivity experiments, stability studies, and the inequality harness.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure,
// 3 harness criterion failure in `check`.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ns2d/config.hpp"
#include "ns2d/errors.hpp"
#include "ns2d/galerkin.hpp"
#include "ns2d/inequalities.hpp"
#include "ns2d/sensitivity.hpp"
#include "ns2d/splitting.hpp"
#include "ns2d/stability.hpp"
#include "ns2d/stokes_basis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ns2d;

namespace {

struct CheckFailure {};

std::string cache_dir_or(const std::string& flag_value, const std::string& fallback) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("NS2D_CACHE_DIR")) return env;
  return fallback;
}

std::string basis_cache_path(const std::string& dir, int n, int k, double nu) {
  return (fs::path(dir) / ("basis_n" + std::to_string(n) + "_k" + std::to_string(k) +
                           "_nu" + fmt_g17(nu) + ".stkb"))
      .string();
}

StokesEigenbasis obtain_basis(const std::string& dir, int n, int k, double nu) {
  fs::create_directories(dir);
  const std::string path = basis_cache_path(dir, n, k, nu);
  if (fs::exists(path)) {
    try {
      StokesEigenbasis B = load_basis(path, n);
      if (B.k == k && B.nu == nu) return B;
    } catch (const std::exception& e) {
      std::cerr << "cache file " << path << " unusable (" << e.what() << "), recomputing\n";
    }
  }
  StokesEigenbasis B = compute_eigenbasis(build_grid(n), nu, k);
  save_basis(B, path);
  return B;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  os << text;
}

json trajectory_summary(const Trajectory& traj, double q) {
  double max_l2 = 0.0;
  for (const auto& m : traj.monitors) max_l2 = std::max(max_l2, m.l2);
  return json{{"final_l2", traj.monitors.back().l2},
              {"max_l2", max_l2},
              {"final_h1", traj.monitors.back().h1},
              {"lq_l4_norm", lq_l4_norm(traj, q)},
              {"steps", traj.steps()}};
}

struct LoadedRun {
  RunConfig rc;
  StokesEigenbasis B;
  TrilinearTensor T3;  // empty (k=0) when not needed
  ForceSpec F = ForceSpec::zero();
  std::vector<double> c0;
  GalerkinConfig cfg;
  fs::path outdir;
};

LoadedRun prepare_run(const std::string& config_path, const std::string& cache_flag,
                      bool need_tensor) {
  LoadedRun r;
  r.rc = load_config_file(config_path);
  const std::string cdir = cache_dir_or(cache_flag, r.rc.out_dir);
  r.B = obtain_basis(cdir, r.rc.n, r.rc.k, r.rc.nu);
  if (need_tensor || r.rc.nu0 != 0.0) r.T3 = assemble_trilinear(r.B);
  r.F = build_force(r.rc.force, &r.B);
  r.c0 = build_initial(r.rc.initial, r.B, r.rc.seed);
  r.cfg = galerkin_config(r.rc);
  r.outdir = r.rc.out_dir;
  fs::create_directories(r.outdir);
  return r;
}

// fixed smooth probing direction for the sensitivity report
ForceConfig default_direction() {
  ForceConfig fc;
  fc.type = ForceConfig::Type::Vortex;
  fc.amp = 1.0;
  fc.profile.kind = TimeProfile::Kind::Sin;
  fc.profile.omega = 2.0;
  return fc;
}

// ---------------------------------------------------------------------------

int cmd_eigs(int n, int k, double nu, const std::string& out) {
  StokesEigenbasis B = compute_eigenbasis(build_grid(n), nu, k);
  save_basis(B, out);
  const int show = std::min(5, B.k);
  for (int j = 0; j < show; ++j) {
    std::cout << "lambda_" << (j + 1) << " = " << fmt_g17(B.lambdas[j]) << "\n";
  }
  std::cout << "cached " << out << "\n";
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& cache_flag) {
  LoadedRun r = prepare_run(config_path, cache_flag, false);
  const TrilinearTensor* T3 = (r.T3.k > 0) ? &r.T3 : nullptr;
  Trajectory traj = integrate(r.c0, r.cfg, T3, r.F, r.B);
  auto src = make_force_source(r.F, r.B);
  EnergyResidual res = energy_residual(traj, r.cfg, T3, src, r.B);

  const std::string stem = (r.outdir / r.rc.prefix).string();
  write_series_csv(stem + "_series.csv", traj, &res);
  write_coeff_dump(stem + "_coeffs.stkc", traj);
  json summary = trajectory_summary(traj, r.rc.q);
  summary["energy_residual_max"] = res.max_abs;
  summary["n"] = r.rc.n;
  summary["k"] = r.rc.k;
  summary["nu"] = r.rc.nu;
  summary["nu0"] = r.rc.nu0;
  summary["seed"] = r.rc.seed;
  write_text(stem + "_summary.json", summary.dump(2) + "\n");
  std::cout << "final |y|_L2 = " << fmt_g17(traj.monitors.back().l2) << "\n";
  return 0;
}

int cmd_split(const std::string& config_path, const std::string& cache_flag,
              const std::string& split_init) {
  LoadedRun r = prepare_run(config_path, cache_flag, true);
  std::vector<double> zeros(r.B.k, 0.0);
  const std::vector<double>& c0S = (split_init == "stokes") ? r.c0 : zeros;
  const std::vector<double>& c0N = (split_init == "stokes") ? zeros : r.c0;
  Trajectory yS = solve_stokes_rough(r.F, c0S, r.cfg, r.B);
  Trajectory yN = solve_perturbed(yS, c0N, r.cfg, r.T3, r.B);
  SplitReport rep = recompose_and_compare(yN, yS, r.F, r.c0, r.cfg, r.T3, r.B);

  const std::string stem = (r.outdir / r.rc.prefix).string();
  std::ofstream os(stem + "_split.csv", std::ios::trunc);
  os << "time,ys_l2,ys_h1,ys_l4,yn_l2,yn_h1,yn_l4,discrepancy\n";
  for (int m = 0; m <= yS.steps(); ++m) {
    os << fmt_g17(yS.times[m]) << "," << fmt_g17(yS.monitors[m].l2) << ","
       << fmt_g17(yS.monitors[m].h1) << "," << fmt_g17(yS.monitors[m].l4) << ","
       << fmt_g17(yN.monitors[m].l2) << "," << fmt_g17(yN.monitors[m].h1) << ","
       << fmt_g17(yN.monitors[m].l4) << "," << fmt_g17(rep.discrepancy[m]) << "\n";
  }
  os.close();
  json summary = {{"max_discrepancy", rep.max_discrepancy},
                  {"stokes_leg", trajectory_summary(yS, r.rc.q)},
                  {"nonlinear_leg", trajectory_summary(yN, r.rc.q)},
                  {"direct", trajectory_summary(rep.direct, r.rc.q)},
                  {"split_init", split_init}};
  write_text(stem + "_split.json", summary.dump(2) + "\n");
  std::cout << "max recomposition discrepancy = " << fmt_g17(rep.max_discrepancy) << "\n";
  return 0;
}

int cmd_sensitivity(const std::string& config_path, const std::string& cache_flag) {
  LoadedRun r = prepare_run(config_path, cache_flag, true);
  ForceSpec gdir = build_force(default_direction(), &r.B);
  FdReport rep = fd_derivative_report(r.F, gdir, r.c0, r.cfg, r.T3, r.B);

  const std::string stem = (r.outdir / r.rc.prefix).string();
  std::ofstream os(stem + "_fd.csv", std::ios::trunc);
  os << "epsilon,remainder_1,remainder_2\n";
  for (size_t i = 0; i < rep.eps.size(); ++i) {
    os << fmt_g17(rep.eps[i]) << "," << fmt_g17(rep.rem1[i]) << "," << fmt_g17(rep.rem2[i])
       << "\n";
  }
  os.close();
  json summary = {{"order1", rep.order1},
                  {"order2", rep.order2},
                  {"tiny_eps", rep.tiny_eps},
                  {"tiny_rem1", rep.tiny_rem1},
                  {"tiny_roundoff_dominated", rep.tiny_roundoff_dominated}};
  write_text(stem + "_fd.json", summary.dump(2) + "\n");
  std::cout << "order1 = " << fmt_g17(rep.order1) << ", order2 = " << fmt_g17(rep.order2)
            << "\n";
  return 0;
}

int cmd_stability(const std::string& config_path, const std::string& cache_flag,
                  int samples) {
  LoadedRun r = prepare_run(config_path, cache_flag, true);
  EmpiricalConstants ec = empirical_constants(r.B.grid, r.B, r.T3, samples, r.rc.seed);
  SmallnessReport small = smallness_report(r.F, ec, r.cfg, r.T3, r.B);
  DecayResult dr = decay_experiment(r.F, r.c0, r.cfg, r.T3, r.B);

  const std::string stem = (r.outdir / r.rc.prefix).string();
  std::ofstream os(stem + "_decay.csv", std::ios::trunc);
  os << "time,dist\n";
  for (size_t m = 0; m < dr.times.size(); ++m) {
    os << fmt_g17(dr.times[m]) << "," << fmt_g17(dr.dist[m]) << "\n";
  }
  os.close();
  json summary = {{"alpha_fit", dr.alpha_fit},
                  {"r2", dr.r2},
                  {"passed", dr.passed},
                  {"monotone_after_transient", dr.monotone_after_transient},
                  {"alpha_pred", small.alpha_pred},
                  {"margin", small.margin},
                  {"claim", small.claim},
                  {"C1", ec.C1},
                  {"C3", ec.C3},
                  {"steady_residual", small.steady.residual},
                  {"steady_l4", small.steady.l4}};
  write_text(stem + "_stability.json", summary.dump(2) + "\n");
  std::cout << "alpha_fit = " << fmt_g17(dr.alpha_fit)
            << ", alpha_pred = " << fmt_g17(small.alpha_pred) << "\n";
  return 0;
}

int cmd_check(int n, int k, double nu, int samples, std::uint64_t seed,
              const std::string& cache_flag, const std::string& out_path) {
  const std::string cdir = cache_dir_or(cache_flag, ".");
  AdmissibilityParams ap = validate_params(1.5, 7.0);

  auto harness = [&](int nn, int ss) {
    StokesEigenbasis B = obtain_basis(cdir, nn, k, nu);
    TrilinearTensor T3 = assemble_trilinear(B);
    json rep;
    rep["gagliardo_r4"] = gagliardo_check(B.grid, B, 4.0, ss, seed).max_ratio;
    SkewReport sk = skew_check(T3, B, std::max(ss, 1000), seed);
    rep["skew_normalized"] = sk.max_normalized;
    rep["skew_polarization"] = sk.max_polarization;
    for (const auto& est : trilinear_bounds_check(B.grid, B, T3, ap, ss, seed)) {
      rep["trilinear_" + est.name] = est.max_ratio;
    }
    return rep;
  };

  json base = harness(n, samples);
  json more_samples = harness(n, 2 * samples);
  json finer = harness(2 * n, samples);

  json report;
  report["n"] = n;
  report["k"] = k;
  report["samples"] = samples;
  bool pass = true;
  for (auto& [key, val] : base.items()) {
    json entry;
    entry["base"] = val;
    entry["double_samples"] = more_samples[key];
    entry["double_grid"] = finer[key];
    if (key.rfind("skew", 0) == 0) {
      const bool ok = val.get<double>() <= 1e-10 &&
                      more_samples[key].get<double>() <= 1e-10 &&
                      finer[key].get<double>() <= 1e-10;
      entry["pass"] = ok;
      pass = pass && ok;
    } else {
      const double b = val.get<double>();
      const double ds = more_samples[key].get<double>();
      const double dg = finer[key].get<double>();
      const double drift_s = std::abs(ds - b) / std::max(b, ds);
      const double drift_g = std::abs(dg - b) / std::max(b, dg);
      entry["drift_samples"] = drift_s;
      entry["drift_grid"] = drift_g;
      const bool ok = drift_s <= 0.15 && drift_g <= 0.15;
      entry["pass"] = ok;
      pass = pass && ok;
    }
    report[key] = entry;
  }
  report["pass"] = pass;
  const std::string text = report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
    std::cout << (pass ? "check passed" : "check FAILED") << "\n";
  }
  if (!pass) throw CheckFailure{};
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral Galerkin solver for 2D incompressible flow on the unit square"};
  app.require_subcommand(1);

  auto* eigs = app.add_subcommand("eigs", "compute and cache a Stokes eigenbasis");
  int e_n = 32, e_k = 32;
  double e_nu = 0.05;
  std::string e_out = "basis.stkb";
  eigs->add_option("--n", e_n, "cells per side");
  eigs->add_option("--k", e_k, "number of modes");
  eigs->add_option("--nu", e_nu, "viscosity");
  eigs->add_option("--out", e_out, "output cache file");

  std::string cfg_path, cache_flag;

  auto* sim = app.add_subcommand("simulate", "integrate the Galerkin system");
  sim->add_option("--config", cfg_path, "run configuration file")->required();
  sim->add_option("--cache-dir", cache_flag, "basis cache directory");

  auto* split = app.add_subcommand("split", "Stokes/nonlinear splitting experiment");
  std::string split_init = "nonlinear";
  split->add_option("--config", cfg_path, "run configuration file")->required();
  split->add_option("--cache-dir", cache_flag, "basis cache directory");
  split->add_option("--split-init", split_init, "leg receiving the initial data")
      ->check(CLI::IsMember({"nonlinear", "stokes"}));

  auto* sens = app.add_subcommand("sensitivity", "finite-difference derivative report");
  sens->add_option("--config", cfg_path, "run configuration file")->required();
  sens->add_option("--cache-dir", cache_flag, "basis cache directory");

  auto* stab = app.add_subcommand("stability", "steady state and decay experiment");
  int samples = 200;
  stab->add_option("--config", cfg_path, "run configuration file")->required();
  stab->add_option("--cache-dir", cache_flag, "basis cache directory");
  stab->add_option("--samples", samples, "ensemble size for empirical constants");

  auto* check = app.add_subcommand("check", "inequality harness with saturation checks");
  int c_n = 32, c_k = 24, c_samples = 200;
  double c_nu = 0.05;
  std::uint64_t c_seed = 1;
  std::string c_out;
  check->add_option("--n", c_n, "base grid size (doubled internally)");
  check->add_option("--k", c_k, "number of modes");
  check->add_option("--nu", c_nu, "viscosity");
  check->add_option("--samples", c_samples, "base sample count (doubled internally)");
  check->add_option("--seed", c_seed, "ensemble seed");
  check->add_option("--cache-dir", cache_flag, "basis cache directory");
  check->add_option("--out", c_out, "write the JSON report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // help exits 0, any parse failure is a config error
  }

  try {
    if (eigs->parsed()) return cmd_eigs(e_n, e_k, e_nu, e_out);
    if (sim->parsed()) return cmd_simulate(cfg_path, cache_flag);
    if (split->parsed()) return cmd_split(cfg_path, cache_flag, split_init);
    if (sens->parsed()) return cmd_sensitivity(cfg_path, cache_flag);
    if (stab->parsed()) return cmd_stability(cfg_path, cache_flag, samples);
    if (check->parsed()) return cmd_check(c_n, c_k, c_nu, c_samples, c_seed, cache_flag, c_out);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const CheckFailure&) {
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
