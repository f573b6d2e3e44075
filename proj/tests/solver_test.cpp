#include "mtifp/oracle.hpp"
#include "mtifp/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

namespace mtifp {
namespace {

SolverConfig base_config(double eps, double tau, double t_final, int n = 128) {
  SolverConfig c;
  c.grid = {-16.0, 16.0, n};
  c.eps = eps;
  c.tau = tau;
  c.t_final = t_final;
  return c;
}

double h2_diff(const FieldHat& a, const FieldHat& b) { return sobolev_norm(a - b, 2); }

/// Exact solution of the linear equation, mode by mode.
SolverState linear_exact(const SolverState& s0, double eps, double t) {
  SolverState out(s0.u.grid());
  const auto& g = s0.u.grid();
  for (int l = g.min_mode(); l <= g.max_mode(); ++l) {
    const double w = mode_frequencies(eps, g.mu(l)).omega;
    const Complex rot = phase::cis(w, t);
    out.u[l] = s0.u[l] * rot.real() + s0.u_dot[l] * rot.imag() / w;
    out.u_dot[l] = -s0.u[l] * w * rot.imag() + s0.u_dot[l] * rot.real();
  }
  return out;
}

TEST(StepCount, RoundsWithinTolerance) {
  EXPECT_EQ(step_count(1.0, 1e-3), 1000);
  EXPECT_EQ(step_count(3e-3, 1e-3), 3);
  EXPECT_EQ(step_count(1.0, 0.2 / 4096), 20480);
  EXPECT_THROW(step_count(1.0, 0.3), ConfigError);
  EXPECT_THROW(step_count(1.0, 0.0), ConfigError);
}

TEST(Init, BuiltInData) {
  auto c = base_config(0.5, 1e-3, 1.0, 64);
  const auto s = init(c);
  const auto u = from_spectral(s.u), ud = from_spectral(s.u_dot);
  const auto g = c.grid.make();
  for (int j = 0; j < g.size(); ++j) {
    const double x = g.node(j);
    const double e = std::exp(-0.5 * x * x);
    EXPECT_NEAR(std::abs(u[static_cast<std::size_t>(j)] - Complex(e, e)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(ud[static_cast<std::size_t>(j)] - 1.5 * e / 0.25), 0.0, 1e-13);
  }
  c.data = InitialData::real_gaussian;
  c.phi2_convention = Phi2Convention::paper_section5_literal;
  const auto lit = from_spectral(init(c).u_dot);
  EXPECT_NEAR(std::abs(lit[32] - 1.5 / 0.0625), 0.0, 1e-12);
  c.data = InitialData::zero;
  EXPECT_EQ(sobolev_norm(init(c).u, 2), 0.0);
  c.data = InitialData::tabulated;
  c.phi1_table.assign(63, 1.0);
  c.phi2_table.assign(64, 1.0);
  EXPECT_THROW(init(c), ConfigError);
  c.data = InitialData::gaussian_pair;
  c.real_fast_path = true;
  EXPECT_THROW(init(c), ConfigError);
}

TEST(Step, ZeroStateStaysZero) {
  auto c = base_config(0.3, 0.01, 0.05, 32);
  c.data = InitialData::zero;
  const auto s = propagate(c);
  EXPECT_EQ(sobolev_norm(s.u, 2), 0.0);
  EXPECT_EQ(sobolev_norm(s.u_dot, 2), 0.0);
  EXPECT_EQ(s.step_index, 5);
}

TEST(Step, LinearCaseIsExact) {
  for (double eps : {1.0, 0.1, 0.01}) {
    for (double tau : {0.1, 0.01}) {
      auto c = base_config(eps, tau, 1.0);
      c.lambda = 0.0;
      const auto s = propagate(c);
      const auto exact = linear_exact(init(c), eps, 1.0);
      EXPECT_LE(h2_diff(s.u, exact.u), 1e-10) << eps << " " << tau;
    }
  }
}

TEST(Step, DivergenceIsReported) {
  auto c = base_config(0.5, 0.01, 0.02, 32);
  c.data = InitialData::tabulated;
  c.phi1_table.assign(32, 0.0);
  c.phi2_table.assign(32, 0.0);
  c.phi1_table[3] = std::numeric_limits<double>::quiet_NaN();
  try {
    propagate(c);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 1);
    EXPECT_FALSE(std::isfinite(e.norm()));
  }
}

TEST(Propagate, ObserversAndStepIndex) {
  auto c = base_config(0.5, 1e-3, 3e-3, 32);
  std::vector<std::int64_t> seen;
  std::vector<double> times;
  const Observer obs{1, [&](std::int64_t n, double t, const SolverState&) {
                       seen.push_back(n);
                       times.push_back(t);
                     }};
  const auto s = propagate(c, std::span<const Observer>(&obs, 1));
  EXPECT_EQ(s.step_index, 3);
  EXPECT_EQ(seen, (std::vector<std::int64_t>{0, 1, 2, 3}));
  EXPECT_DOUBLE_EQ(times.back(), 3e-3);
}

TEST(Step, FastPathMatchesGeneralPath) {
  for (double eps : {1.0, 0.5, 0.05}) {
    auto c = base_config(eps, 0.01, 0.2);
    c.data = InitialData::real_gaussian;
    const auto slow = propagate(c);
    c.real_fast_path = true;
    const auto fast = propagate(c);
    EXPECT_LE(sobolev_norm(slow.u - fast.u, 0), 1e-13 * sobolev_norm(slow.u, 0)) << eps;
    EXPECT_LE(sobolev_norm(slow.u_dot - fast.u_dot, 0), 1e-13 * sobolev_norm(slow.u_dot, 0));
  }
}

TEST(Step, RealDataStaysReal) {
  auto c = base_config(0.2, 0.02, 1.0);
  c.data = InitialData::real_gaussian;
  int checked = 0;
  const Observer obs{5, [&](std::int64_t, double, const SolverState& s) {
                       for (const FieldHat* f : {&s.u, &s.u_dot}) {
                         const auto v = from_spectral(*f);
                         double imag = 0.0, total = 0.0;
                         for (auto z : v) {
                           imag = std::max(imag, std::abs(z.imag()));
                           total += std::norm(z);
                         }
                         EXPECT_LE(imag, 1e-11 * std::sqrt(total));
                       }
                       ++checked;
                     }};
  propagate(c, std::span<const Observer>(&obs, 1));
  EXPECT_EQ(checked, 11);
}

TEST(Step, GaugeCovariance) {
  const Complex g = std::polar(1.0, 0.7);
  auto c = base_config(0.25, 0.01, 0.3);
  const auto plain = propagate(c);
  const auto s0 = init(c);
  c.data = InitialData::tabulated;
  for (const auto& v : from_spectral(s0.u)) c.phi1_table.push_back(g * v);
  for (const auto& v : from_spectral(s0.u_dot)) c.phi2_table.push_back(g * v * (c.eps * c.eps));
  const auto rotated = propagate(c);
  EXPECT_LE(sobolev_norm(rotated.u - g * plain.u, 2), 1e-13 * sobolev_norm(plain.u, 2));
  EXPECT_LE(sobolev_norm(rotated.u_dot - g * plain.u_dot, 2),
            1e-13 * sobolev_norm(plain.u_dot, 2));
}

double local_error(double tau) {
  auto c = base_config(0.5, tau, tau);
  const auto s0 = init(c);
  const auto one = propagate(c);
  OracleConfig oc;
  oc.grid = c.grid;
  oc.eps = c.eps;
  oc.t_final = tau;
  oc.rel_tol = 1e-13;
  oc.abs_tol = 1e-13;
  const auto ref = mode_ode_solve(oc, s0);
  return h2_diff(one.u, ref.u);
}

TEST(Step, LocalErrorIsThirdOrder) {
  const double e1 = local_error(1e-3);
  const double e2 = local_error(5e-4);
  const double ratio = e1 / e2;
  EXPECT_GE(ratio, 6.0) << e1 << " " << e2;
  EXPECT_LE(ratio, 10.0) << e1 << " " << e2;
}

TEST(Step, RemainderScalesWithEpsSquared) {
  std::vector<double> ratios;
  for (int k = 1; k <= 8; ++k) {
    const double eps = std::ldexp(1.0, -k);
    auto c = base_config(eps, 0.05, 0.05);
    Stepper stepper(c);
    const auto st = stepper.advance(init(c));
    ratios.push_back(sobolev_norm(st.r, 2) / (eps * eps));
  }
  // bounded, and not growing as eps shrinks
  double early = 0.0, late = 0.0;
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    EXPECT_GT(ratios[k], 0.0);
    EXPECT_LE(ratios[k], 2.0);
    (k < ratios.size() / 2 ? early : late) = std::max(k < ratios.size() / 2 ? early : late,
                                                      ratios[k]);
  }
  EXPECT_LE(late, 2.0 * early);
}

TEST(Energy, Examples) {
  const auto g = make_grid(-16.0, 16.0, 32);
  SolverState zero(g);
  EXPECT_EQ(energy(zero, 1.0, 1.0), 0.0);
  SolverState one(g);
  one.u[1] = 1.0;
  const double mu = g.mu(1);
  EXPECT_NEAR(energy(one, 1.0, 0.0), 32.0 * (mu * mu + 1.0), 1e-12);
}

double energy_drift(double tau) {
  auto c = base_config(1.0, tau, 1.0, 256);
  const double e0 = energy(init(c), c);
  const double e1 = energy(propagate(c), c);
  return std::abs(e1 - e0) / e0;
}

TEST(Energy, DriftIsSecondOrder) {
  const double d1 = energy_drift(1e-3);
  const double d2 = energy_drift(5e-4);
  EXPECT_LE(d1, 1e-4);
  EXPECT_GE(d1 / d2, 3.0) << d1 << " " << d2;
  EXPECT_LE(d1 / d2, 5.0) << d1 << " " << d2;
}

TEST(EvaluateAt, MatchesNodes) {
  auto c = base_config(0.5, 1e-3, 1e-3, 64);
  const auto s = init(c);
  const auto g = c.grid.make();
  const auto nodal = from_spectral(s.u);
  for (int j : {0, 10, 32}) {
    EXPECT_NEAR(std::abs(evaluate_at(s.u, g.node(j)) - nodal[static_cast<std::size_t>(j)]), 0.0,
                1e-13);
  }
}

}  // namespace
}  // namespace mtifp
