// Acceptance run: one PASS/FAIL line per criterion, measured values below it.
//
// References are kept in $MTIFP_REFERENCE_DIR (default ./references); the
// first run computes twelve of them, about 40 s each on one core.

#include <malloc.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mtifp/coeff_check.hpp"
#include "mtifp/harness.hpp"

namespace {

using namespace mtifp;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void note(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    lines.emplace_back(buf);
  }
  /// Records a check and its measured value.
  void check(bool ok, const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    lines.push_back(std::string(ok ? "ok    " : "MISS  ") + buf);
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool within_factor(double got, double want, double factor) {
  return got >= want / factor && got <= want * factor;
}

Outcome coefficient_oracle() {
  Outcome o;
  const auto r = check_coefficients({1.0, 0.5, 0.1, 0.01, 1e-4}, {0.2, 1e-2, 1e-4});
  o.check(r.failures == 0, "%zu of %zu values within 1e-10 rel / 1e-14 abs (worst %.2e, %s)",
          r.compared - r.failures, r.compared, r.worst_relative, r.worst.c_str());
  o.check(r.seconds <= 60.0, "runtime %.1f s (limit 60 s)", r.seconds);
  return o;
}

Outcome linear_exactness() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (double eps : {1.0, 0.1, 0.01}) {
    for (double tau : {0.1, 0.01}) {
      SolverConfig c;
      c.grid.n = 128;
      c.eps = eps;
      c.tau = tau;
      c.t_final = 1.0;
      c.lambda = 0.0;
      const auto s0 = init(c);
      const auto s = propagate(c);
      FieldHat exact(s0.u.grid());
      const auto& g = s0.u.grid();
      for (int l = g.min_mode(); l <= g.max_mode(); ++l) {
        const double w = mode_frequencies(eps, g.mu(l)).omega;
        const Complex rot = phase::cis(w, c.t_final);
        exact[l] = s0.u[l] * rot.real() + s0.u_dot[l] * rot.imag() / w;
      }
      const double err = sobolev_norm(s.u - exact, 2);
      o.note("eps %-5g tau %-5g  H2 error %.2e", eps, tau, err);
      worst = std::max(worst, err);
    }
  }
  o.check(worst <= 1e-10, "max H2 error %.2e (limit 1e-10)", worst);
  o.note("runtime %.1f s", seconds_since(t0));
  return o;
}

Outcome spatial_rows(const ReferenceStore& store) {
  Outcome o;
  struct Row {
    double eps;
    std::array<double, 3> paper;
  };
  const std::array<Row, 2> rows = {Row{0.5, {1.65e-1, 3.60e-3, 1.03e-6}},
                                   Row{std::ldexp(0.5, -9), {6.33e-1, 3.57e-2, 1.92e-7}}};
  for (const auto& row : rows) {
    auto spec = preset("table1");
    spec.eps_values = {row.eps};
    SweepTiming timing;
    const auto t0 = Clock::now();
    const auto r = run_spatial_sweep(spec, SolverConfig{}, store, default_threads(), &timing);
    const double secs = seconds_since(t0);
    const auto& e = r.rows[0].errors;
    o.note("eps %g: errors %.3e %.3e %.3e %.3e (paper %.2e %.2e %.2e)", row.eps, e[0], e[1],
           e[2], e[3], row.paper[0], row.paper[1], row.paper[2]);
    for (std::size_t k = 0; k < 3; ++k) {
      o.check(within_factor(e[k], row.paper[k], 3.0), "eps %g h=%g: %.3e vs %.2e (ratio %.2f)",
              row.eps, r.resolutions[k], e[k], row.paper[k], e[k] / row.paper[k]);
    }
    o.check(e[3] <= 1e-9, "eps %g h=1/8: %.2e (limit 1e-9)", row.eps, e[3]);
    o.check(secs <= 1200.0, "eps %g row runtime %.0f s incl. reference (limit ~1200 s)",
            row.eps, secs);
  }
  return o;
}

Outcome temporal_table(const ReferenceStore& store) {
  Outcome o;
  const int threads = default_threads();

  SweepTiming lite_timing;
  const auto lite = run_temporal_sweep(preset("table2-lite"), SolverConfig{}, store, threads,
                                       &lite_timing);
  double lite_refs = 0.0;
  for (double s : lite_timing.reference_seconds) lite_refs += s;
  o.check(lite_timing.seconds <= 600.0,
          "table2-lite preset %.0f s (limit 600 s; %.0f s of it spent on references)",
          lite_timing.seconds, lite_refs);

  auto spec = preset("table2");
  spec.resolutions = {};
  for (int k = 0; k <= 12; k += 2) spec.resolutions.push_back(std::ldexp(0.2, -k));
  const auto r = run_temporal_sweep(spec, SolverConfig{}, store, threads);
  o.check(r.failures.empty(), "%zu failed cells", r.failures.size());
  if (!r.failures.empty()) return o;

  auto row_of = [&](double eps) -> const ReportRow& {
    for (const auto& row : r.rows) {
      if (row.eps == eps) return row;
    }
    throw std::logic_error("row missing");
  };
  auto rates_from = [](const ReportRow& row, std::size_t first, std::size_t last) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t k = first; k <= last; ++k) {
      lo = std::min(lo, row.rates[k]);
      hi = std::max(hi, row.rates[k]);
    }
    return std::pair{lo, hi};
  };
  auto print_row = [&](const char* label, const ReportRow& row) {
    std::string line = label;
    for (double e : row.errors) {
      char buf[16];
      std::snprintf(buf, sizeof buf, " %.2e", e);
      line += buf;
    }
    line += "  rates";
    for (std::size_t k = 1; k < row.rates.size(); ++k) {
      char buf[16];
      std::snprintf(buf, sizeof buf, " %.2f", row.rates[k]);
      line += buf;
    }
    o.note("%s", line.c_str());
  };

  const auto& top = row_of(0.5);
  const auto& bottom = row_of(std::ldexp(0.5, -13));
  print_row("eps0      ", top);
  print_row("eps0/2^13 ", bottom);
  print_row("max       ", r.uniform);

  const auto [t_lo, t_hi] = rates_from(top, 2, 6);
  o.check(t_lo >= 1.9, "(i) eps0 rates from tau0/2^4 on: min %.2f (limit >= 1.9)", t_lo);
  o.check(within_factor(top.errors[6], 3.67e-8, 3.0), "(i) eps0 at tau0/2^12: %.3e vs 3.67e-08",
          top.errors[6]);
  const auto [b_lo, b_hi] = rates_from(bottom, 2, 6);
  o.check(b_lo >= 1.9, "(ii) eps0/2^13 rates from tau0/2^4 on: min %.2f (limit >= 1.9)", b_lo);
  const auto [u_lo, u_hi] = rates_from(r.uniform, 1, 4);
  o.check(u_lo >= 0.7 && u_hi <= 1.3,
          "(iii) uniform row rates tau0/2^2..tau0/2^8 in [%.2f, %.2f] (limit [0.7, 1.3])", u_lo,
          u_hi);
  (void)t_hi;
  (void)b_hi;
  (void)lite;
  return o;
}

Outcome cross_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  SolverConfig c;
  c.grid.n = 128;
  c.eps = 0.5;
  c.tau = 1e-4;
  c.t_final = 1.0;
  const auto mti = propagate(c);
  OracleConfig oc;
  oc.grid = c.grid;
  oc.eps = c.eps;
  oc.t_final = c.t_final;
  oc.rel_tol = oc.abs_tol = 1e-11;
  const auto ode = mode_ode_solve(oc, init(c));
  const double diff = sobolev_norm(mti.u - ode.u, 2);
  const double secs = seconds_since(t0);
  o.check(diff <= 1e-5, "H2 difference %.2e (limit 1e-5)", diff);
  o.check(secs <= 120.0, "runtime %.1f s (limit 120 s)", secs);
  return o;
}

Complex random_complex(std::mt19937& rng) {
  std::normal_distribution<double> d;
  return {d(rng), d(rng)};
}

FieldHat random_field(const SpectralGrid& g, std::mt19937& rng, int decay) {
  FieldHat f(g);
  for (int l = g.min_mode(); l <= g.max_mode(); ++l) {
    f[l] = random_complex(rng) / (1.0 + std::pow(std::abs(l), decay));
  }
  return f;
}

Outcome properties() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937 rng(2024);

  // spectral
  {
    double parseval = 0.0, roundtrip = 0.0, symmetry = 0.0;
    for (int n : {16, 128, 1024}) {
      const auto g = make_grid(-16.0, 16.0, n);
      std::vector<Complex> v(static_cast<std::size_t>(n));
      std::vector<Complex> real(v.size());
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = random_complex(rng);
        real[j] = v[j].real();
      }
      const auto f = to_spectral(g, v);
      double nodal = 0.0, spec = 0.0;
      for (auto z : v) nodal += std::norm(z);
      for (int l = g.min_mode(); l <= g.max_mode(); ++l) spec += std::norm(f[l]);
      parseval = std::max(parseval, std::abs(spec - nodal / n) / (nodal / n));
      const auto back = from_spectral(f);
      for (std::size_t j = 0; j < v.size(); ++j) {
        roundtrip = std::max(roundtrip, std::abs(back[j] - v[j]));
      }
      const auto fr = to_spectral(g, real);
      for (int l = 1; l < n / 2; ++l) {
        symmetry = std::max(symmetry, std::abs(fr[-l] - std::conj(fr[l])));
      }
    }
    o.check(parseval <= 1e-13, "Parseval relative defect %.1e", parseval);
    o.check(roundtrip <= 1e-13, "transform round trip %.1e", roundtrip);
    o.check(symmetry <= 1e-15, "real-field conjugate symmetry %.1e", symmetry);
  }

  // nonlinearity
  {
    double gauge = 0.0, split = 0.0;
    std::uniform_real_distribution<double> ua(0.0, 2.0 * std::numbers::pi), ue(0.01, 1.0);
    auto rel = [](Complex a, Complex b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    for (int trial = 0; trial < 1000; ++trial) {
      const Complex zp = random_complex(rng), zm = random_complex(rng), r = random_complex(rng);
      const Complex g = std::polar(1.0, ua(rng));
      const double eps = ue(rng), s = ue(rng);
      const CubicParams p{1.0};
      const auto f0 = f_pm(zp, zm, p);
      const auto f1 = f_pm(g * zp, std::conj(g) * zm, p);
      gauge = std::max({gauge, rel(f1.plus, g * f0.plus), rel(f1.minus, std::conj(g) * f0.minus)});
      const auto g0 = g_pm(zp, zm, p);
      const auto g1 = g_pm(g * zp, std::conj(g) * zm, p);
      gauge = std::max({gauge, rel(g1.plus, g * g0.plus), rel(g1.minus, std::conj(g) * g0.minus)});
      const Complex u = carrier_waves(zp, zm, s, eps) + r;
      gauge = std::max(gauge, rel(cubic(g * u, p), g * cubic(u, p)));
      split = std::max(split, rel(reconstruct_f(zp, zm, r, s, eps, p), cubic(u, p)));
    }
    o.check(gauge <= 1e-12, "gauge covariance of the kernels %.1e", gauge);
    o.check(split <= 1e-12, "five-term split reproduces f(u) %.1e", split);
  }

  // decomposition round trip and real fast path
  {
    double rt = 0.0;
    for (double eps : {1.0, 0.1, 0.01}) {
      const auto g = make_grid(-16.0, 16.0, 128);
      const auto u = random_field(g, rng, 2), ud = random_field(g, rng, 2);
      const auto st = decompose(u, ud, eps, 0.01, CubicParams{});
      const auto [u0, ud0] = reconstruct(st, eps, 0.0);
      const double e2 = eps * eps;
      const double scale = sobolev_norm(u, 0) + e2 * sobolev_norm(ud, 0);
      rt = std::max({rt, sobolev_norm(u0 - u, 0) / sobolev_norm(u, 0),
                     e2 * sobolev_norm(ud0 - ud, 0) / scale});
    }
    o.check(rt <= 1e-13, "decompose/reconstruct round trip at s=0 %.1e", rt);

    double fast = 0.0;
    for (double eps : {1.0, 0.5, 0.05}) {
      SolverConfig c;
      c.grid.n = 128;
      c.eps = eps;
      c.tau = 0.01;
      c.t_final = 0.2;
      c.data = InitialData::real_gaussian;
      const auto slow = propagate(c);
      c.real_fast_path = true;
      const auto quick = propagate(c);
      fast = std::max(fast, sobolev_norm(slow.u - quick.u, 0) / sobolev_norm(slow.u, 0));
    }
    o.check(fast <= 1e-13, "real-data fast path vs general path %.1e", fast);
  }

  // remainder after one step is O(eps^2)
  {
    std::string list;
    double early = 0.0, late = 0.0, top = 0.0;
    for (int k = 1; k <= 8; ++k) {
      const double eps = std::ldexp(1.0, -k);
      SolverConfig c;
      c.grid.n = 128;
      c.eps = eps;
      c.tau = 0.05;
      c.t_final = 0.05;
      Stepper stepper(c);
      const double q = sobolev_norm(stepper.advance(init(c)).r, 2) / (eps * eps);
      (k <= 4 ? early : late) = std::max(k <= 4 ? early : late, q);
      top = std::max(top, q);
      char buf[16];
      std::snprintf(buf, sizeof buf, " %.2f", q);
      list += buf;
    }
    o.check(top <= 2.0 && late <= 2.0 * early,
            "|r|_H2 / eps^2 over eps = 2^-1..2^-8:%s (bounded, no growth)", list.c_str());
  }

  // local truncation error ratio
  {
    auto local_error = [](double tau) {
      SolverConfig c;
      c.grid.n = 128;
      c.eps = 0.5;
      c.tau = tau;
      c.t_final = tau;
      const auto s0 = init(c);
      const auto one = propagate(c);
      OracleConfig oc;
      oc.grid = c.grid;
      oc.eps = c.eps;
      oc.t_final = tau;
      oc.rel_tol = oc.abs_tol = 1e-13;
      return sobolev_norm(one.u - mode_ode_solve(oc, s0).u, 2);
    };
    const double e1 = local_error(1e-3), e2 = local_error(5e-4);
    o.check(e1 / e2 >= 6.0 && e1 / e2 <= 10.0,
            "local error %.2e / %.2e = %.2f (limit [6, 10])", e1, e2, e1 / e2);
  }
  const double secs = seconds_since(t0);
  o.check(secs <= 120.0, "runtime %.1f s (limit 120 s)", secs);
  return o;
}

Outcome energy_diagnostic() {
  Outcome o;
  auto drift = [](double tau) {
    SolverConfig c;
    c.eps = 1.0;
    c.lambda = 1.0;
    c.t_final = 1.0;
    c.tau = tau;
    const double e0 = energy(init(c), c);
    return std::abs(energy(propagate(c), c) - e0) / e0;
  };
  const double d1 = drift(1e-3), d2 = drift(5e-4);
  o.check(d1 <= 1e-4, "relative drift at tau=1e-3: %.2e (limit 1e-4)", d1);
  o.check(d1 / d2 >= 3.0 && d1 / d2 <= 5.0, "drift ratio tau / (tau/2): %.2f (limit [3, 5])",
          d1 / d2);
  return o;
}

Outcome performance() {
  Outcome o;
  std::vector<double> per_step;
  std::vector<double> heap;
  std::vector<std::size_t> workspace;
  const std::vector<int> sizes = {256, 512, 1024, 2048};
  for (int n : sizes) {
    SolverConfig c;
    c.grid.n = n;
    c.eps = 0.5;
    c.tau = 1e-3;
    c.t_final = 1.0;
    const auto before = mallinfo2().uordblks;
    auto state = std::make_unique<SolverState>(init(c));
    auto stepper = std::make_unique<Stepper>(c);
    heap.push_back(static_cast<double>(mallinfo2().uordblks - before));
    workspace.push_back(stepper->workspace_bytes());
    double best = INFINITY;
    for (int rep = 0; rep < 3; ++rep) {
      const int steps = std::max(20, 2'000'000 / n);
      const auto t0 = Clock::now();
      for (int k = 0; k < steps; ++k) stepper->step(*state);
      best = std::min(best, seconds_since(t0) / steps);
    }
    per_step.push_back(best);
    o.note("N %-5d  %.1f us/step  heap %.0f kB  workspace %zu kB", n, best * 1e6,
           heap.back() / 1024.0, workspace.back() / 1024);
  }
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    const double ratio = per_step[k] / per_step[k - 1];
    o.check(ratio <= 2.6, "step time N=%d / N=%d: %.2f (limit 2.6)", sizes[k], sizes[k - 1],
            ratio);
  }
  double lo = INFINITY, hi = 0.0, wlo = INFINITY, whi = 0.0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    lo = std::min(lo, heap[k] / sizes[k]);
    hi = std::max(hi, heap[k] / sizes[k]);
    wlo = std::min(wlo, static_cast<double>(workspace[k]) / sizes[k]);
    whi = std::max(whi, static_cast<double>(workspace[k]) / sizes[k]);
  }
  o.check(whi / wlo <= 1.01, "workspace bytes per grid point %.0f..%.0f", wlo, whi);
  o.check(hi / lo <= 1.25, "allocated bytes per grid point %.0f..%.0f (spread <= 25%%)", lo, hi);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const auto store = ReferenceStore::from_environment("references");
  std::printf("reference store: %s\n", store.directory().string().c_str());

  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "coefficient oracle equivalence", coefficient_oracle},
      {2, "linear exactness", linear_exactness},
      {3, "spatial spectral accuracy", [&] { return spatial_rows(store); }},
      {4, "temporal convergence", [&] { return temporal_table(store); }},
      {5, "cross-oracle agreement", cross_oracle},
      {6, "property suites", properties},
      {7, "energy diagnostic", energy_diagnostic},
      {8, "performance contract", performance},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.lines.push_back(std::string("error: ") + e.what());
    }
    std::printf("%s  %d. %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                seconds_since(t0));
    for (const auto& line : o.lines) std::printf("        %s\n", line.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
