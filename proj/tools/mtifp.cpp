// Command-line front end: single runs, convergence sweeps, traces, references
// and the coefficient self-check.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mtifp/coeff_check.hpp"
#include "mtifp/harness.hpp"

namespace {

using namespace mtifp;
namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::string preset;
  std::string out;
  std::vector<double> eps;
  std::vector<double> tau;
  std::vector<int> grid_n;
  std::optional<double> t_final;
  std::optional<double> lambda;
  int threads = 0;
  std::int64_t snapshot_stride = 0;
};

void add_common(CLI::App* app, Flags& f, bool lists) {
  app->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  app->add_option("--eps", f.eps, lists ? "eps values" : "eps")->expected(lists ? -1 : 1);
  app->add_option("--tau", f.tau, lists ? "time steps" : "time step")->expected(lists ? -1 : 1);
  app->add_option("--grid-n", f.grid_n, lists ? "grid sizes" : "grid size")
      ->expected(lists ? -1 : 1);
  app->add_option("--t-final", f.t_final, "final time");
  app->add_option("--lambda", f.lambda, "nonlinearity coefficient");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--threads", f.threads, "worker threads (default: all cores)")
      ->check(CLI::PositiveNumber);
}

ExperimentConfig base_config(const Flags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (!f.preset.empty()) cfg.sweep = preset(f.preset);
  if (f.t_final) cfg.solver.t_final = *f.t_final;
  if (f.lambda) cfg.solver.lambda = *f.lambda;
  if (f.threads > 0) {
    cfg.threads = f.threads;
  } else if (f.config.empty()) {
    cfg.threads = default_threads();
  }
  return cfg;
}

fs::path out_dir(const Flags& f) { return f.out.empty() ? fs::path(".") : fs::path(f.out); }

ReferenceStore store_for(const Flags& f) {
  return ReferenceStore::from_environment(out_dir(f) / "references");
}

int run_solve(const Flags& f) {
  auto cfg = base_config(f);
  auto& c = cfg.solver;
  if (!f.eps.empty()) c.eps = f.eps.front();
  if (!f.tau.empty()) c.tau = f.tau.front();
  if (!f.grid_n.empty()) c.grid.n = f.grid_n.front();
  validate(c);
  const auto t0 = std::chrono::steady_clock::now();
  const auto start = init(c);
  const auto end = propagate(c);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double e0 = energy(start, c);
  const double e1 = energy(end, c);
  std::printf("eps %s  tau %s  N %d  T %s  lambda %s\n", shortest(c.eps).c_str(),
              shortest(c.tau).c_str(), c.grid.n, shortest(c.t_final).c_str(),
              shortest(c.lambda).c_str());
  std::printf("steps          %lld\n", static_cast<long long>(end.step_index));
  std::printf("|u(T)|_H2      %.10e\n", sobolev_norm(end.u, 2));
  std::printf("energy         %.10e -> %.10e (relative drift %.3e)\n", e0, e1,
              std::abs(e1 - e0) / std::abs(e0));
  std::printf("wall time      %.2f s\n", secs);
  if (!f.out.empty()) {
    const auto u = from_spectral(end.u);
    const auto ut = from_spectral(end.u_dot);
    const auto x = end.u.grid().nodes();
    std::string csv = "x,re_u,im_u,re_u_t,im_u_t\n";
    for (std::size_t j = 0; j < u.size(); ++j) {
      csv += shortest(x[j]) + ',' + shortest(u[j].real()) + ',' + shortest(u[j].imag()) + ',' +
             shortest(ut[j].real()) + ',' + shortest(ut[j].imag()) + '\n';
    }
    const auto path = out_dir(f) / "solution.csv";
    write_text(path, csv);
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

int run_sweep_cmd(const Flags& f, Axis axis) {
  auto cfg = base_config(f);
  if (!cfg.sweep) cfg.sweep = preset(axis == Axis::spatial ? "table1-lite" : "table2-lite");
  auto& s = *cfg.sweep;
  if (s.axis != axis) {
    throw ConfigError("sweep '" + s.name + "' is " + to_string(s.axis) + ", not " +
                      to_string(axis));
  }
  if (!f.eps.empty()) s.eps_values = f.eps;
  const double length = cfg.solver.grid.b - cfg.solver.grid.a;
  if (axis == Axis::spatial) {
    if (f.tau.size() > 1) throw ConfigError("--tau: spatial sweeps take a single step size");
    if (!f.tau.empty()) s.fixed_tau = f.tau.front();
    if (!f.grid_n.empty()) {
      s.resolutions.clear();
      for (int n : f.grid_n) s.resolutions.push_back(length / n);
    }
  } else {
    if (f.grid_n.size() > 1) throw ConfigError("--grid-n: temporal sweeps take a single N");
    if (!f.grid_n.empty()) s.fixed_h = length / f.grid_n.front();
    if (!f.tau.empty()) s.resolutions = f.tau;
  }
  if (!f.eps.empty() || !f.tau.empty() || !f.grid_n.empty()) s.name += "-custom";
  validate(s, cfg.solver);

  SweepTiming timing;
  const auto report = run_sweep(s, cfg.solver, store_for(f), cfg.threads, &timing);
  const auto stem = out_dir(f) / (s.name + "_" + to_string(axis));
  write_text(stem.string() + ".csv", format_csv(report));
  write_text(stem.string() + ".meta.json", format_sidecar(report, timing));
  std::cout << format_table(report);
  std::printf("wrote %s.csv (%.1f s)\n", stem.string().c_str(), timing.seconds);
  return report.failures.empty() ? 0 : 2;
}

int run_traces(const Flags& f) {
  TraceSpec spec;
  if (!f.config.empty()) {
    const auto cfg = load_config(f.config);
    spec.grid = cfg.solver.grid;
    spec.tau = cfg.solver.tau;
    spec.t_final = cfg.solver.t_final;
    spec.lambda = cfg.solver.lambda;
  }
  if (!f.eps.empty()) spec.eps_values = f.eps;
  if (!f.tau.empty()) spec.tau = f.tau.front();
  if (!f.grid_n.empty()) spec.grid.n = f.grid_n.front();
  if (f.t_final) spec.t_final = *f.t_final;
  if (f.lambda) spec.lambda = *f.lambda;
  spec.snapshot_stride = f.snapshot_stride;
  const auto dir = out_dir(f);
  for (const auto& tr : emit_traces(spec, dir)) {
    std::printf("eps %-10s %zu samples, dominant period %.4g\n", shortest(tr.eps).c_str(),
                tr.t.size(), dominant_period(tr));
  }
  std::printf("wrote traces and plot_traces.py to %s\n", dir.string().c_str());
  return 0;
}

int run_make_reference(const Flags& f) {
  auto cfg = base_config(f);
  SweepSpec s = cfg.sweep.value_or(preset("table2"));
  if (!f.eps.empty()) s.eps_values = f.eps;
  if (!f.grid_n.empty()) s.reference_n = f.grid_n.front();
  if (!f.tau.empty()) s.reference_tau = f.tau.front();
  const auto store = store_for(f);
  parallel_for(s.eps_values.size(), cfg.threads, [&](std::size_t i) {
    const auto spec = reference_spec(s, cfg.solver, s.eps_values[i]);
    const auto where = scenario_store(store, spec);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      (void)reference_solution(spec, where);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::printf("%s  %.1f s\n", where.path_for(spec).string().c_str(), secs);
    } catch (const std::exception& e) {
      std::printf("eps %s failed: %s\n", shortest(spec.eps).c_str(), e.what());
    }
  });
  return 0;
}

int run_check_coeffs(const Flags& f) {
  const std::vector<double> eps = f.eps.empty() ? std::vector<double>{1.0, 0.5, 0.1, 0.01, 1e-4}
                                                : f.eps;
  const std::vector<double> taus = f.tau.empty() ? std::vector<double>{0.2, 1e-2, 1e-4} : f.tau;
  const int modes = f.grid_n.empty() ? 64 : f.grid_n.front();
  const auto r = check_coefficients(eps, taus, 1e-10, 1e-14, modes);
  std::printf("compared %zu values, %zu outside 1e-10 relative / 1e-14 absolute\n", r.compared,
              r.failures);
  std::printf("worst relative deviation %.3e (%s)\n", r.worst_relative, r.worst.c_str());
  std::printf("wall time %.1f s\n", r.seconds);
  return r.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Klein-Gordon solver with multiscale time integration"};
  app.require_subcommand(1);
  Flags f;

  auto* solve = app.add_subcommand("solve", "propagate one configuration to T");
  add_common(solve, f, false);

  auto* spatial = app.add_subcommand("sweep-spatial", "error table over h at fixed tau");
  add_common(spatial, f, true);
  spatial->add_option("--preset", f.preset, "table1 | table1-lite");

  auto* temporal = app.add_subcommand("sweep-temporal", "error table over tau at fixed h");
  add_common(temporal, f, true);
  temporal->add_option("--preset", f.preset, "table2 | table2-lite");

  auto* traces = app.add_subcommand("traces", "u(0, t) time series per eps");
  add_common(traces, f, true);
  traces->add_option("--snapshot-stride", f.snapshot_stride,
                     "also write u(x, t) every this many steps");

  auto* make_ref = app.add_subcommand("make-reference", "compute and store reference runs");
  add_common(make_ref, f, true);
  make_ref->add_option("--preset", f.preset, "take the eps list from a preset");

  auto* check = app.add_subcommand("check-coeffs", "closed-form coefficients vs quadrature");
  add_common(check, f, true);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*solve) return run_solve(f);
    if (*spatial) return run_sweep_cmd(f, Axis::spatial);
    if (*temporal) return run_sweep_cmd(f, Axis::temporal);
    if (*traces) return run_traces(f);
    if (*make_ref) return run_make_reference(f);
    if (*check) return run_check_coeffs(f);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
