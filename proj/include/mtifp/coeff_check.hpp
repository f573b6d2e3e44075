#pragma once

// Closed-form step coefficients against independently computed values.
//
// The Duhamel weights come from adaptive quadrature of their defining
// integrals. The propagator entries are tied to b (the quadrature of b') by
// relations that follow from y = alpha e^{i lp s} + beta e^{i lm s}:
//     a  = e^{i lm tau} - i lm eps^2 b
//     a' = lp lm eps^2 b
//     b' = e^{i lm tau} / eps^2 + i lp b

#include <array>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "mtifp/ewi_coeffs.hpp"
#include "mtifp/quadrature.hpp"
#include "mtifp/spectral.hpp"

namespace mtifp {

struct CoefficientCheck {
  std::size_t compared = 0;
  std::size_t failures = 0;
  /// largest |closed - oracle| / max(|oracle|, floor / rel_tol)
  double worst_relative = 0.0;
  std::string worst;
  double seconds = 0.0;
};

/// Mode wavenumbers to probe: every |l| of an n-point grid on [a, b] plus
/// points near mu = 0 and near the resonance mu^2 eps^2 = 8.
inline std::vector<double> probe_wavenumbers(double a, double b, int n, double eps) {
  const auto grid = make_grid(a, b, n);
  std::vector<double> mus;
  for (int l = 0; l <= n / 2; ++l) mus.push_back(grid.mu(l));
  for (double m : {1e-12, 1e-8, 1e-6, 1e-4}) mus.push_back(m);
  const double res = std::sqrt(8.0) / eps;
  for (double d : {0.0, 1e-12, -1e-12, 1e-8, -1e-8, 1e-6, -1e-6, 1e-4, -1e-4}) {
    mus.push_back(res * (1.0 + d));
  }
  return mus;
}

inline CoefficientCheck check_coefficients(const std::vector<double>& eps_values,
                                           const std::vector<double>& taus,
                                           double rel_tol = 1e-10, double abs_floor = 1e-14,
                                           int modes = 64) {
  using Sel = CoefficientSelector;
  constexpr std::array<Sel, 8> kSel = {Sel::c, Sel::d, Sel::c_dot, Sel::d_dot,
                                       Sel::p, Sel::q, Sel::p_dot, Sel::q_dot};
  constexpr std::array<const char*, 12> kName = {"c",  "d",  "c'", "d'", "p", "q",
                                                 "p'", "q'", "a",  "b",  "a'", "b'"};
  const auto t0 = std::chrono::steady_clock::now();
  CoefficientCheck out;
  const Complex i(0.0, 1.0);
  for (double eps : eps_values) {
    const double e2 = eps * eps;
    for (double tau : taus) {
      for (double mu : probe_wavenumbers(-16.0, 16.0, modes, eps)) {
        const auto f = mode_frequencies(eps, mu);
        const auto fc = forcing_coefficients(f, eps, tau);
        const auto ab = ab_coefficients(f, tau);
        const auto q = quadrature_reference(f, eps, tau, kSel, QuadratureOptions{});
        const Complex b = q[2].value;
        const Complex em = phase::cis(f.lambda_minus, tau);
        const std::array<Complex, 12> closed = {fc.c, fc.d, fc.c_dot, fc.d_dot, fc.p,   fc.q,
                                                fc.p_dot, fc.q_dot, ab.a, ab.b, ab.a_dot,
                                                ab.b_dot};
        const std::array<Complex, 12> oracle = {
            q[0].value, q[1].value, q[2].value, q[3].value, q[4].value, q[5].value,
            q[6].value, q[7].value, em - i * f.lambda_minus * e2 * b, b,
            f.lambda_plus * f.lambda_minus * e2 * b, em / e2 + i * f.lambda_plus * b};
        for (std::size_t k = 0; k < closed.size(); ++k) {
          const double err = std::abs(closed[k] - oracle[k]);
          const double rel = err / std::max(std::abs(oracle[k]), abs_floor / rel_tol);
          ++out.compared;
          if (!(rel <= rel_tol)) ++out.failures;
          if (!(rel <= out.worst_relative)) {
            out.worst_relative = rel;
            out.worst = std::string(kName[k]) + " at eps=" + std::to_string(eps) +
                        " tau=" + std::to_string(tau) + " mu=" + std::to_string(mu);
          }
        }
      }
    }
  }
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace mtifp
