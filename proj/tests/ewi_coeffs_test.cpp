#include "mtifp/coeff_check.hpp"
#include "mtifp/ewi_coeffs.hpp"
#include "mtifp/quadrature.hpp"

#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace mtifp {
namespace {

using Sel = CoefficientSelector;

constexpr std::array<Sel, 8> kAll = {Sel::c, Sel::d, Sel::c_dot, Sel::d_dot,
                                     Sel::p, Sel::q, Sel::p_dot, Sel::q_dot};

Complex pick(const ForcingCoefficients& f, Sel s) {
  switch (s) {
    case Sel::c: return f.c;
    case Sel::d: return f.d;
    case Sel::c_dot: return f.c_dot;
    case Sel::d_dot: return f.d_dot;
    case Sel::p: return f.p;
    case Sel::q: return f.q;
    case Sel::p_dot: return f.p_dot;
    case Sel::q_dot: return f.q_dot;
    default: return {};
  }
}

const char* name(Sel s) {
  constexpr std::array<const char*, 9> names = {"c", "d", "c'", "d'", "p",
                                                "q", "p'", "q'", "p1"};
  return names[static_cast<std::size_t>(s)];
}

// 1e-10 relative with a 1e-14 absolute floor
::testing::AssertionResult close(Complex got, Complex want) {
  const double err = std::abs(got - want);
  if (err <= std::max(1e-10 * std::abs(want), 1e-14)) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "got " << got << " want " << want << " err " << err;
}

void expect_matches_quadrature(double eps, double mu, double tau) {
  const auto f = mode_frequencies(eps, mu);
  const auto closed = forcing_coefficients(f, eps, tau);
  const auto ref = quadrature_reference(f, eps, tau, kAll, QuadratureOptions{});
  for (std::size_t j = 0; j < kAll.size(); ++j) {
    EXPECT_TRUE(close(pick(closed, kAll[j]), ref[j].value))
        << name(kAll[j]) << " eps=" << eps << " mu=" << mu << " tau=" << tau;
  }
}

TEST(ModeFrequencies, Examples) {
  auto f = mode_frequencies(1.0, 0.0);
  EXPECT_EQ(f.omega, 1.0);
  EXPECT_EQ(f.lambda_plus, -2.0);
  EXPECT_EQ(f.lambda_minus, 0.0);
  f = mode_frequencies(0.5, 0.0);
  EXPECT_EQ(f.omega, 4.0);
  EXPECT_EQ(f.lambda_plus, -8.0);
  EXPECT_EQ(f.lambda_minus, 0.0);
  for (double eps : {1.0, 0.5, 0.25}) {
    const double mu = std::sqrt(8.0) / eps;
    EXPECT_NEAR(eps * eps * mode_frequencies(eps, mu).omega, 3.0, 1e-15);
  }
  EXPECT_THROW(mode_frequencies(0.0, 1.0), ConfigError);
  EXPECT_THROW(mode_frequencies(1.5, 1.0), ConfigError);
}

TEST(ModeFrequencies, RandomizedInvariants) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> le(-4.0, 0.0), lm(-3.0, 3.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double eps = std::pow(10.0, le(rng));
    const double mu = (trial % 2 ? -1.0 : 1.0) * std::pow(10.0, lm(rng));
    const auto f = mode_frequencies(eps, mu);
    const double e2 = eps * eps;
    EXPECT_LT(f.lambda_plus, f.lambda_minus);
    EXPECT_GE(f.lambda_minus, 0.0 - 0.0);
    EXPECT_GT(f.lambda_minus, 0.0);
    EXPECT_NEAR((f.lambda_plus - f.lambda_minus) * e2, -2.0 * f.beta, 1e-14 * f.beta);
    EXPECT_GE(e2 * f.omega, 1.0);
    const double lhs = e2 * e2 * f.omega * f.omega - 9.0;
    EXPECT_NEAR(lhs, mu * mu * e2 - 8.0, 1e-13 * (1.0 + mu * mu * e2));
  }
  EXPECT_EQ(mode_frequencies(0.3, 0.0).lambda_minus, 0.0);
}

TEST(AbCoefficients, ZeroModeClosedForm) {
  for (double eps : {1.0, 0.5, 0.1}) {
    for (double tau : {1e-3, 0.1, 0.7}) {
      const auto f = mode_frequencies(eps, 0.0);
      const auto ab = ab_coefficients(f, tau);
      EXPECT_NEAR(std::abs(ab.a - 1.0), 0.0, 1e-15);
      EXPECT_NEAR(std::abs(ab.a_dot), 0.0, 1e-15);
      const Complex e = std::polar(1.0, -2.0 * tau / (eps * eps));
      EXPECT_NEAR(std::abs(ab.b - Complex(0.0, 0.5) * (e - 1.0)), 0.0, 1e-14);
      EXPECT_NEAR(std::abs(ab.b_dot - e / (eps * eps)), 0.0, 1e-13 / (eps * eps));
    }
  }
}

TEST(AbCoefficients, AtZeroStep) {
  for (double mu : {0.0, 0.3, 10.0}) {
    const auto m = mode_step_coefficients(0.2, mu, 0.0 + 1e-300);
    EXPECT_NEAR(std::abs(m.ab.a - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(m.ab.b), 0.0, 1e-15);
    const auto ab = ab_coefficients(mode_frequencies(0.2, mu), 0.0);
    EXPECT_EQ(ab.a, Complex(1.0));
    EXPECT_EQ(ab.b, Complex(0.0));
    const auto fc = forcing_coefficients(mode_frequencies(0.2, mu), 0.2, 0.0);
    for (Sel s : kAll) EXPECT_EQ(pick(fc, s), Complex(0.0));
  }
}

// (a, b) and their derivatives against an adaptive Runge-Kutta-Fehlberg 7(8)
// integration of eps^2 y'' + 2i y' + mu^2 y = 0.
std::array<Complex, 2> integrate_mode(double eps, double mu, double tau, Complex y0, Complex y1) {
  using State = std::array<double, 4>;
  namespace ode = boost::numeric::odeint;
  const double e2 = eps * eps;
  auto rhs = [&](const State& x, State& dx, double) {
    const Complex y(x[0], x[1]), yp(x[2], x[3]);
    const Complex ypp = -(Complex(0.0, 2.0) * yp + mu * mu * y) / e2;
    dx = {yp.real(), yp.imag(), ypp.real(), ypp.imag()};
  };
  State x = {y0.real(), y0.imag(), y1.real(), y1.imag()};
  ode::integrate_adaptive(
      ode::make_controlled(1e-14, 1e-14, ode::runge_kutta_fehlberg78<State>()), rhs, x, 0.0,
      tau, tau / 1000.0);
  return {Complex(x[0], x[1]), Complex(x[2], x[3])};
}

TEST(AbCoefficients, MatchesOdeOracle) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> le(-1.3, 0.0), lm(-2.0, 1.5), lt(-3.0, 0.0);
  for (int trial = 0; trial < 40; ++trial) {
    const double eps = std::pow(10.0, le(rng));
    const double mu = std::pow(10.0, lm(rng));
    const double tau = std::pow(10.0, lt(rng));
    const auto ab = ab_coefficients(mode_frequencies(eps, mu), tau);
    const auto ya = integrate_mode(eps, mu, tau, 1.0, 0.0);
    const auto yb = integrate_mode(eps, mu, tau, 0.0, 1.0);
    const double e2 = eps * eps;
    auto rel = [](Complex got, Complex want, double scale) {
      return std::abs(got - want) / std::max(std::abs(want), scale);
    };
    EXPECT_LT(rel(ab.a, ya[0], 1.0), 1e-10) << eps << " " << mu << " " << tau;
    EXPECT_LT(rel(ab.a_dot, ya[1], 1.0 / e2), 1e-10);
    // eps^2 b is the solution with y'(0) = 1
    EXPECT_LT(rel(e2 * ab.b, yb[0], e2), 1e-10);
    EXPECT_LT(rel(e2 * ab.b_dot, yb[1], 1.0), 1e-10);
    // Wronskian of the two solutions evolves as exp(-2 i tau / eps^2)
    const Complex w_oracle = ya[0] * yb[1] - ya[1] * yb[0];
    const Complex w = ab.a * (e2 * ab.b_dot) - ab.a_dot * (e2 * ab.b);
    EXPECT_LT(std::abs(w - w_oracle), 1e-10);
    EXPECT_LT(std::abs(w - phase::cis(-2.0 / e2, tau)), 1e-10);
  }
}

TEST(AbCoefficients, BoundedByTwo) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> le(-4.0, 0.0), lm(-3.0, 4.0), lt(-6.0, 0.0);
  for (int trial = 0; trial < 5000; ++trial) {
    const double eps = std::pow(10.0, le(rng));
    const auto ab = ab_coefficients(mode_frequencies(eps, std::pow(10.0, lm(rng))),
                                    std::pow(10.0, lt(rng)));
    EXPECT_LE(std::abs(ab.a), 2.0);
    EXPECT_LE(std::abs(eps * eps * ab.b), 2.0);
  }
}

TEST(PhiFunctions, BranchesAgreeAtSwitchover) {
  for (double x : {phase::kSeriesThreshold, -phase::kSeriesThreshold,
                   std::nextafter(phase::kSeriesThreshold, 0.0), 0.3, 0.49}) {
    const phase::Split s{x, 0.0};
    const Complex d1 = phase::phi1_direct(s), s1 = phase::phi1_series(x);
    const Complex d2 = phase::phi2_direct(s), s2 = phase::phi2_series(x);
    EXPECT_LE(std::abs(d1 - s1), 1e-10 * std::abs(s1));
    EXPECT_LE(std::abs(d2 - s2), 1e-10 * std::abs(s2));
  }
  EXPECT_EQ(phase::phi1({0.0, 0.0}), Complex(1.0));
  EXPECT_EQ(phase::phi2({0.0, 0.0}), Complex(0.5));
}

TEST(Quadrature, ZeroModeAnalytic) {
  const double eps = 1.0, tau = 0.1;
  const auto f = mode_frequencies(eps, 0.0);
  // int_0^tau i (e^{i (tau - th) lp} - 1)/2 d th with lp = -2
  const double lp = -2.0;
  const Complex i(0.0, 1.0);
  const Complex exact = 0.5 * i * ((std::exp(i * lp * tau) - 1.0) / (i * lp) - tau);
  const auto r = quadrature_reference(f, eps, tau, Sel::c);
  EXPECT_NEAR(std::abs(r.value - exact), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(forcing_coefficients(f, eps, tau).c - exact), 0.0, 1e-12);
}

TEST(Quadrature, UnitCarrierVariant) {
  for (double eps : {1.0, 0.3, 0.05}) {
    for (double mu : {0.0, 1.0, 7.0}) {
      const double tau = 0.07;
      const auto f = mode_frequencies(eps, mu);
      const auto r = quadrature_reference(f, eps, tau, Sel::p_unit_carrier);
      const double w = f.omega;
      const double exact = (1.0 - std::cos(w * tau)) / (eps * eps * w * w);
      EXPECT_TRUE(close(r.value, exact)) << eps << " " << mu;
    }
  }
}

TEST(Quadrature, RampVanishesQuadratically) {
  for (double tau : {1e-3, 1e-5, 1e-8}) {
    const auto f = mode_frequencies(0.5, 3.0);
    const auto r = quadrature_reference(f, 0.5, tau, Sel::q);
    EXPECT_LE(std::abs(r.value), tau * tau);
    EXPECT_LE(std::abs(forcing_coefficients(f, 0.5, tau).q), tau * tau);
  }
  EXPECT_EQ(quadrature_reference(mode_frequencies(0.5, 3.0), 0.5, 0.0, Sel::q).value,
            Complex(0.0));
}

TEST(Quadrature, ReportsNonConvergence) {
  const auto f = mode_frequencies(0.5, 3.0);
  QuadratureOptions coarse;
  coarse.periods_per_panel = 1e4;
  coarse.max_refinements = 0;
  EXPECT_THROW(quadrature_reference(f, 0.5, 5.0, Sel::p, coarse), ConvergenceFailure);
  coarse.max_refinements = 12;
  EXPECT_NO_THROW(quadrature_reference(f, 0.5, 5.0, Sel::p, coarse));
}

TEST(ForcingCoefficients, ResonantModeIsFinite) {
  const double eps = 0.5, tau = 0.1;
  const double mu = std::sqrt(8.0) / eps;
  const auto f = mode_frequencies(eps, mu);
  const auto fc = forcing_coefficients(f, eps, tau);
  EXPECT_TRUE(std::isfinite(fc.p.real()) && std::isfinite(fc.p.imag()));
  EXPECT_TRUE(close(fc.p, quadrature_reference(f, eps, tau, Sel::p).value));
}

TEST(ForcingCoefficients, BallsAroundSingularities) {
  for (double eps : {1.0, 0.5, 0.1}) {
    const double mu_res = std::sqrt(8.0) / eps;
    for (double delta : {0.0, 1e-12, 1e-8, -1e-8, 1e-6, -1e-6, 1e-4, -1e-4}) {
      expect_matches_quadrature(eps, mu_res * (1.0 + delta), 0.1);
    }
    for (double mu : {0.0, 1e-12, 1e-8, 1e-6, 1e-4}) expect_matches_quadrature(eps, mu, 0.1);
  }
}

TEST(ForcingCoefficients, MatchQuadratureOnModeGrid) {
  const auto grid = make_grid(-16.0, 16.0, 64);
  for (double eps : {1.0, 0.5, 0.1, 0.01, 1e-4}) {
    for (double tau : {0.2, 1e-2, 1e-4}) {
      for (int l = 0; l <= 32; ++l) expect_matches_quadrature(eps, grid.mu(l), tau);
    }
  }
}

TEST(ForcingCoefficients, UniformBounds) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> le(-4.0, 0.0), lm(-2.0, 3.0), lt(-6.0, -0.5);
  double c_flat = 0.0, c_ramp = 0.0, c_flat_mu = 0.0, c_ramp_mu = 0.0;
  for (int trial = 0; trial < 20000; ++trial) {
    const double eps = std::pow(10.0, le(rng));
    const double mu = std::pow(10.0, lm(rng));
    const double tau = std::pow(10.0, lt(rng));
    const auto fc = forcing_coefficients(mode_frequencies(eps, mu), eps, tau);
    const double flat = std::abs(fc.c) + std::abs(fc.p);
    const double ramp = std::abs(fc.d) + std::abs(fc.q);
    c_flat = std::max(c_flat, flat / tau);
    c_ramp = std::max(c_ramp, ramp / (tau * tau));
    c_flat_mu = std::max(c_flat_mu, mu * flat * eps / tau);
    c_ramp_mu = std::max(c_ramp_mu, mu * ramp * eps / (tau * tau));
  }
  // |b| <= 1/beta and |sin|/beta <= 1 give C = 2 for every eps
  EXPECT_LE(c_flat, 2.0);
  EXPECT_LE(c_ramp, 2.0);
  EXPECT_LE(c_flat_mu, 2.0);
  EXPECT_LE(c_ramp_mu, 2.0);
}

TEST(StepCoefficients, TableSharesMirroredModes) {
  const auto grid = make_grid(-16.0, 16.0, 32);
  const StepCoefficients table(grid, 0.25, 0.01);
  EXPECT_TRUE(table.matches(grid, 0.25, 0.01));
  EXPECT_FALSE(table.matches(grid, 0.25, 0.02));
  for (int l = 1; l < 16; ++l) EXPECT_EQ(table.mode(l).ab.a, table.mode(-l).ab.a);
  const auto direct = mode_step_coefficients(0.25, grid.mu(-16), 0.01);
  EXPECT_EQ(table.mode(-16).forcing.q, direct.forcing.q);
  for (std::size_t k = 0; k < 32; ++k) {
    EXPECT_EQ(table.slot(k).forcing.p, table.mode(grid.mode(k)).forcing.p);
  }
  const double w = mode_frequencies(0.25, grid.mu(3)).omega;
  EXPECT_NEAR(table.mode(3).sin_over_omega, std::sin(w * 0.01) / w, 1e-16);
  EXPECT_NEAR(table.mode(3).cos_omega_tau, std::cos(w * 0.01), 1e-15);
  EXPECT_THROW(StepCoefficients(grid, 0.25, 0.0), ConfigError);
}

TEST(CoefficientCheck, FullGridWithSingularNeighbourhoods) {
  const auto r = check_coefficients({1.0, 0.5, 0.1, 0.01, 1e-4}, {0.2, 1e-2, 1e-4});
  EXPECT_EQ(r.failures, 0u) << "worst " << r.worst_relative << " at " << r.worst;
  EXPECT_EQ(r.compared, 5u * 3u * 46u * 12u);
}

}  // namespace
}  // namespace mtifp
