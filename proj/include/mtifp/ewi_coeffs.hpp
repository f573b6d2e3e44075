#pragma once

// Per-mode exponential-wave-integrator coefficients at fixed (eps, tau).
//
// For one Fourier mode the z-equations read eps^2 z'' + 2i z' + mu^2 z = -f,
// whose characteristic roots are lambda^+ < lambda^- <= 0, and the remainder
// equation is a harmonic oscillator with frequency omega. The step uses
//   a, b, a', b'          homogeneous propagator of the z-equation,
//   c, d, c', d'          Duhamel weights of f and s*f (Gautschi quadrature),
//   p, q, p', q'          Duhamel weights of exp(3is/eps^2) g and its slope,
//   sin(omega tau)/omega, cos(omega tau)   remainder propagator.
// Every integral is reduced to phi_1/phi_2 of a purely imaginary argument, so
// the removable singularities at mu = 0 and at the resonance mu^2 eps^2 = 8
// are handled by the series branch in phase.hpp.

#include <cmath>
#include <complex>
#include <vector>

#include "mtifp/errors.hpp"
#include "mtifp/phase.hpp"
#include "mtifp/spectral.hpp"

namespace mtifp {

struct ModeFrequencies {
  double eps = 1.0;
  double mu = 0.0;
  double beta = 1.0;  // sqrt(1 + mu^2 eps^2)
  double omega = 1.0;
  double lambda_plus = -2.0;
  double lambda_minus = 0.0;
  double carrier = 3.0;  // 3 / eps^2, frequency of the third harmonic
};

inline void check_eps(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw ConfigError("eps must lie in (0, 1], got " + std::to_string(eps));
  }
}

inline ModeFrequencies mode_frequencies(double eps, double mu) {
  check_eps(eps);
  ModeFrequencies m;
  const double e2 = eps * eps;
  m.eps = eps;
  m.mu = mu;
  m.beta = std::sqrt(1.0 + mu * mu * e2);
  m.omega = m.beta / e2;
  m.lambda_plus = -(1.0 + m.beta) / e2;
  // (beta - 1)/eps^2 rewritten to avoid cancellation for small mu*eps
  m.lambda_minus = mu * mu / (1.0 + m.beta);
  m.carrier = 3.0 / e2;
  return m;
}

struct AbCoefficients {
  Complex a;
  Complex b;
  Complex a_dot;
  Complex b_dot;
};

inline AbCoefficients ab_coefficients(const ModeFrequencies& f, double tau) {
  if (!(tau >= 0.0)) throw ConfigError("ab_coefficients: tau must be >= 0");
  const double e2 = f.eps * f.eps;
  const double lp = f.lambda_plus;
  const double lm = f.lambda_minus;
  const Complex ep = phase::cis(lp, tau);
  const Complex em = phase::cis(lm, tau);
  // e^{i tau lp} - e^{i tau lm}
  const phase::Split gap = phase::times(phase::two_sum(lp, -lm), tau);
  const Complex diff = std::abs(gap.hi) < 1.0 ? em * phase::expm1i(gap) : ep - em;
  const double denom = lp - lm;

  AbCoefficients r;
  r.a = (lp * em - lm * ep) / denom;
  r.b = Complex(0.0, 1.0) * diff / (e2 * (lm - lp));
  r.a_dot = Complex(0.0, -lp * lm) * diff / denom;
  r.b_dot = (lp * ep - lm * em) / (e2 * denom);
  return r;
}

struct ForcingCoefficients {
  Complex c;
  Complex d;
  Complex c_dot;
  Complex d_dot;
  Complex p;
  Complex q;
  Complex p_dot;
  Complex q_dot;
};

inline ForcingCoefficients forcing_coefficients(const ModeFrequencies& f, double eps,
                                                double tau) {
  check_eps(eps);
  if (!(tau >= 0.0)) throw ConfigError("forcing_coefficients: tau must be >= 0");
  ForcingCoefficients r;
  if (tau == 0.0) return r;

  const double e2 = eps * eps;
  const double lp = f.lambda_plus;
  const double lm = f.lambda_minus;
  const double denom = e2 * (lm - lp);
  const Complex i(0.0, 1.0);

  // int_0^tau e^{i k s} ds = tau phi1,  int_0^tau e^{i k s}(tau - s) ds = tau^2 phi2
  const auto x_plus = phase::two_prod(lp, tau);
  const auto x_minus = phase::two_prod(lm, tau);
  const Complex phi1_gap = phase::phi1(x_plus) - phase::phi1(x_minus);
  const Complex phi2_gap = phase::phi2(x_plus) - phase::phi2(x_minus);

  r.c = i * tau * phi1_gap / denom;
  r.d = i * tau * tau * phi2_gap / denom;
  // c' = b(tau) - b(0) and d' = c after one integration by parts
  r.c_dot = ab_coefficients(f, tau).b;
  r.d_dot = r.c;

  // sin(w s) e^{i k (tau - s)} = e^{i k tau} (e^{i(w-k)s} - e^{-i(w+k)s}) / 2i
  const Complex carrier_phase = phase::cis(f.carrier, tau);
  const auto slow = phase::times(phase::two_sum(f.omega, -f.carrier), tau);
  const auto fast = phase::times(-phase::two_sum(f.omega, f.carrier), tau);
  const Complex s1 = phase::phi1(slow);
  const Complex f1 = phase::phi1(fast);
  const Complex s2 = phase::phi2(slow);
  const Complex f2 = phase::phi2(fast);
  const Complex sin_scale = carrier_phase / (2.0 * i * e2 * f.omega);
  const Complex cos_scale = carrier_phase / (2.0 * e2);

  r.p = sin_scale * tau * (s1 - f1);
  r.q = sin_scale * tau * tau * (s2 - f2);
  r.p_dot = cos_scale * tau * (s1 + f1);
  r.q_dot = cos_scale * tau * tau * (s2 + f2);
  return r;
}

/// All coefficients one mode needs for one step.
struct ModeStepCoefficients {
  AbCoefficients ab;
  ForcingCoefficients forcing;
  double sin_over_omega = 0.0;
  double cos_omega_tau = 1.0;
};

inline ModeStepCoefficients mode_step_coefficients(double eps, double mu, double tau) {
  const auto f = mode_frequencies(eps, mu);
  ModeStepCoefficients m;
  m.ab = ab_coefficients(f, tau);
  m.forcing = forcing_coefficients(f, eps, tau);
  const Complex rot = phase::cis(f.omega, tau);
  m.sin_over_omega = rot.imag() / f.omega;
  m.cos_omega_tau = rot.real();
  return m;
}

/// Immutable per-mode coefficient table for one (eps, tau, grid).
/// Coefficients depend on mu only through mu^2, so +l and -l share an entry.
class StepCoefficients {
 public:
  StepCoefficients(const SpectralGrid& grid, double eps, double tau)
      : grid_(grid), eps_(eps), tau_(tau) {
    check_eps(eps);
    if (!(tau > 0.0)) throw ConfigError("step coefficients: tau must be > 0");
    const int half = grid.size() / 2;
    by_abs_mode_.reserve(static_cast<std::size_t>(half) + 1);
    for (int l = 0; l <= half; ++l) {
      by_abs_mode_.push_back(mode_step_coefficients(eps, grid.mu(l), tau));
    }
  }

  const SpectralGrid& grid() const { return grid_; }
  double eps() const { return eps_; }
  double tau() const { return tau_; }

  bool matches(const SpectralGrid& grid, double eps, double tau) const {
    return grid == grid_ && eps == eps_ && tau == tau_;
  }

  /// Coefficients of logical mode l.
  const ModeStepCoefficients& mode(int l) const {
    return by_abs_mode_[static_cast<std::size_t>(l < 0 ? -l : l)];
  }
  /// Coefficients of storage slot k.
  const ModeStepCoefficients& slot(std::size_t k) const { return mode(grid_.mode(k)); }

 private:
  SpectralGrid grid_;
  double eps_;
  double tau_;
  std::vector<ModeStepCoefficients> by_abs_mode_;
};

}  // namespace mtifp
