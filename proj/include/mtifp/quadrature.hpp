#pragma once

// Numerical reference values for the Duhamel coefficient integrals.
//
// Each integrand is a combination of terms exp(i F s) and exp(i F s)(tau - s)
// over s in [0, tau] (s = tau - theta). The interval is tiled with equal
// panels, each spanning at most kPeriodsPerPanel periods of the fastest
// frequency, and each panel is integrated with the 61-point Gauss-Kronrod
// rule; the embedded 30-point Gauss rule supplies the error estimate. Because
// all panels have the same width, the rule sums on a panel differ only by the
// phase at the panel start, which is evaluated in split precision.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <numbers>
#include <string>
#include <vector>

#include "mtifp/errors.hpp"
#include "mtifp/ewi_coeffs.hpp"
#include "mtifp/phase.hpp"

namespace mtifp {

enum class CoefficientSelector {
  c,
  d,
  c_dot,
  d_dot,
  p,
  q,
  p_dot,
  q_dot,
  /// p with the carrier exp(3 i theta / eps^2) replaced by 1.
  p_unit_carrier,
};

struct QuadratureOptions {
  double abs_tol = 1e-13;
  int max_refinements = 6;
  /// initial panel width, in periods of the fastest frequency; a fractional
  /// count keeps e^{iFw} away from 1 through the first few halvings
  double periods_per_panel = 4.3;
};

struct QuadratureResult {
  Complex value;
  double error_estimate = 0.0;
  std::int64_t panels = 0;
};

namespace detail {

// Panel rule sums are evaluated in extended precision: their rounding error is
// the same on every panel and can add up coherently over millions of panels.
using Wide = long double;
using WideComplex = std::complex<Wide>;

struct KronrodRule {
  std::vector<Wide> nodes;  // on [-1, 1]
  std::vector<Wide> kronrod_weights;
  std::vector<Wide> gauss_weights;  // zero at Kronrod-only nodes
};

inline const KronrodRule& kronrod61() {
  static const KronrodRule rule = [] {
    using GK = boost::math::quadrature::gauss_kronrod<Wide, 61>;
    const auto& x = GK::abscissa();
    const auto& wk = GK::weights();
    const auto& wg = boost::math::quadrature::gauss<Wide, 30>::weights();
    KronrodRule r;
    // boost stores the non-negative half; odd positions are the Gauss nodes.
    for (std::size_t k = 0; k < x.size(); ++k) {
      const Wide g = (k % 2 == 1) ? wg[k / 2] : 0.0L;
      r.nodes.push_back(x[k]);
      r.kronrod_weights.push_back(wk[k]);
      r.gauss_weights.push_back(g);
      if (x[k] != 0.0L) {
        r.nodes.push_back(-x[k]);
        r.kronrod_weights.push_back(wk[k]);
        r.gauss_weights.push_back(g);
      }
    }
    return r;
  }();
  return rule;
}

/// One term exp(i (f1 + f2) s); the sum is formed exactly.
struct Term {
  double f1 = 0.0;
  double f2 = 0.0;
};

struct Moments {
  Complex flat;    // int_0^tau e^{iFs} ds
  Complex ramp;    // int_0^tau e^{iFs} (tau - s) ds
  double error = 0.0;
  // Kronrod/Gauss discrepancy is at the rounding level of the panel sums, so
  // further refinement cannot reduce it.
  bool roundoff_limited = false;
};

template <class T>
struct NeumaierSum {
  std::complex<T> sum;
  std::complex<T> comp;
  void add(std::complex<T> v) {
    auto step = [](T& s, T& c, T x) {
      const T t = s + x;
      if (std::abs(s) >= std::abs(x)) {
        c += (s - t) + x;
      } else {
        c += (x - t) + s;
      }
      s = t;
    };
    T sr = sum.real(), si = sum.imag(), cr = comp.real(), ci = comp.imag();
    step(sr, cr, v.real());
    step(si, ci, v.imag());
    sum = {sr, si};
    comp = {cr, ci};
  }
  std::complex<T> value() const { return sum + comp; }
};

inline WideComplex widen(Complex z) { return {z.real(), z.imag()}; }

inline std::vector<Moments> composite_moments(const std::vector<Term>& terms, double tau,
                                              std::int64_t panels) {
  const auto& rule = kronrod61();
  const double width = tau / static_cast<double>(panels);
  const Wide half = 0.5L * static_cast<Wide>(width);
  const std::size_t nn = rule.nodes.size();

  struct PanelSums {
    WideComplex k0, k1, g0, g1;
    Wide abs0 = 0.0L, abs1 = 0.0L;
  };
  std::vector<PanelSums> wide(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) {
    auto& ps = wide[t];
    const Wide freq = static_cast<Wide>(terms[t].f1) + static_cast<Wide>(terms[t].f2);
    for (std::size_t k = 0; k < nn; ++k) {
      const Wide x = half * (1.0L + rule.nodes[k]);
      const WideComplex e(std::cos(freq * x), std::sin(freq * x));
      ps.k0 += rule.kronrod_weights[k] * half * e;
      ps.k1 += rule.kronrod_weights[k] * half * x * e;
      ps.g0 += rule.gauss_weights[k] * half * e;
      ps.g1 += rule.gauss_weights[k] * half * x * e;
      ps.abs0 += rule.kronrod_weights[k] * half;
      ps.abs1 += rule.kronrod_weights[k] * half * x;
    }
  }
  struct Local {
    WideComplex k0, k1;
    double discrepancy = 0.0;
    double magnitude = 0.0;
  };
  std::vector<Local> local(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto& w = wide[t];
    local[t].k0 = w.k0;
    local[t].k1 = w.k1;
    local[t].discrepancy = static_cast<double>(std::abs(w.k0 - w.g0) * (1.0L + tau) +
                                               std::abs(w.k1 - w.g1));
    local[t].magnitude = static_cast<double>(w.abs0 * (1.0L + tau) + w.abs1);
  }

  // The panel sums k0, k1 are the same on every panel, so
  //   flat = k0 sum_m e_m,   ramp = k0 sum_m lever_m e_m - k1 sum_m e_m
  // with e_m = r^m the phase at the start of panel m, r = e^{iFw}. When r is
  // well away from 1 both sums are geometric and are formed in closed form;
  // adding up 1e7 rounded phases one by one would leave an error far above
  // the cancelled result for |F tau| ~ 1e8.
  std::vector<phase::Split> freqs;
  for (const auto& t : terms) freqs.push_back(phase::two_sum(t.f1, t.f2));
  // panels * width misses tau by a few ulps; for |F tau| ~ 1e7 the sliver
  // [panels * width, tau] is not negligible next to int e^{iFs} ds ~ 1/F.
  const phase::Split end = phase::two_prod(static_cast<double>(panels), width);
  const double sliver = (tau - end.hi) - end.lo;

  std::vector<Complex> s0(terms.size()), s1(terms.size());
  std::vector<std::size_t> direct;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const Complex r = phase::cis(phase::times(freqs[t], width));
    const Complex one_minus_r = -phase::expm1i(phase::times(freqs[t], width));
    if (std::abs(one_minus_r) < 0.2) {
      direct.push_back(t);
      continue;
    }
    const Complex r_end = phase::cis(phase::times(freqs[t], end));
    // sum_{m<M} r^m and sum_{m<M} (M - m) r^m
    s0[t] = (1.0 - r_end) / one_minus_r;
    const Complex count = (static_cast<double>(panels) - r * s0[t]) / one_minus_r;
    s1[t] = width * count + sliver * s0[t];
  }
  if (!direct.empty()) {
    std::vector<NeumaierSum<double>> phases(terms.size()), levered(terms.size());
    for (std::int64_t m = 0; m < panels; ++m) {
      const phase::Split start = phase::two_prod(static_cast<double>(m), width);
      // tau - start, remaining lever arm of the ramp factor at the panel start
      const double lever = (tau - start.hi) - start.lo;
      for (std::size_t t : direct) {
        const Complex base = phase::cis(phase::times(freqs[t], start));
        phases[t].add(base);
        levered[t].add(lever * base);
      }
    }
    for (std::size_t t : direct) {
      s0[t] = phases[t].value();
      s1[t] = levered[t].value();
    }
  }

  std::vector<Moments> out(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const Complex tail = phase::cis(phase::times(freqs[t], tau));
    const WideComplex flat = local[t].k0 * widen(s0[t]) + widen(sliver * tail);
    const WideComplex ramp = local[t].k0 * widen(s1[t]) - local[t].k1 * widen(s0[t]);
    out[t].flat = {static_cast<double>(flat.real()), static_cast<double>(flat.imag())};
    out[t].ramp = {static_cast<double>(ramp.real()), static_cast<double>(ramp.imag())};
    const double per_panel = local[t].discrepancy;
    const double rounding =
        50.0 * std::numeric_limits<double>::epsilon() * local[t].magnitude;
    out[t].error = per_panel * static_cast<double>(panels);
    out[t].roundoff_limited = per_panel <= rounding;
  }
  return out;
}

inline std::int64_t initial_panels(const std::vector<Term>& terms, double tau,
                                   double periods_per_panel) {
  double fastest = 0.0;
  for (const auto& t : terms) fastest = std::max(fastest, std::abs(t.f1) + std::abs(t.f2));
  const double period = 2.0 * std::numbers::pi / std::max(fastest, 1e-300);
  const double panels = std::ceil(tau / (periods_per_panel * period));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(panels));
}

}  // namespace detail

namespace detail {

/// integrand = prefactor * sum_t weights[t] e^{i F_t s} [* (tau - s) if ramp]
struct Integrand {
  std::vector<Term> terms;
  std::vector<Complex> weights;
  bool ramp = false;
  Complex prefactor = 1.0;
};

inline Integrand integrand(const ModeFrequencies& f, double eps, double tau,
                           CoefficientSelector which) {
  const double e2 = eps * eps;
  const Complex i(0.0, 1.0);
  Integrand g;
  switch (which) {
    case CoefficientSelector::c:
    case CoefficientSelector::d: {
      // b(s) = i (e^{i lp s} - e^{i lm s}) / (eps^2 (lm - lp))
      const double denom = e2 * (f.lambda_minus - f.lambda_plus);
      g.terms = {{f.lambda_plus, 0.0}, {f.lambda_minus, 0.0}};
      g.weights = {i / denom, -i / denom};
      g.ramp = which == CoefficientSelector::d;
      break;
    }
    case CoefficientSelector::c_dot:
    case CoefficientSelector::d_dot: {
      // b'(s) = (lp e^{i lp s} - lm e^{i lm s}) / (eps^2 (lp - lm))
      const double denom = e2 * (f.lambda_plus - f.lambda_minus);
      g.terms = {{f.lambda_plus, 0.0}, {f.lambda_minus, 0.0}};
      g.weights = {f.lambda_plus / denom, -f.lambda_minus / denom};
      g.ramp = which == CoefficientSelector::d_dot;
      break;
    }
    case CoefficientSelector::p:
    case CoefficientSelector::q:
    case CoefficientSelector::p_unit_carrier: {
      // sin(w s)/(eps^2 w) * e^{i k (tau - s)}
      const double k = which == CoefficientSelector::p_unit_carrier ? 0.0 : f.carrier;
      g.terms = {{f.omega, -k}, {-f.omega, -k}};
      const Complex w = 1.0 / (2.0 * i * e2 * f.omega);
      g.weights = {w, -w};
      g.prefactor = phase::cis(k, tau);
      g.ramp = which == CoefficientSelector::q;
      break;
    }
    case CoefficientSelector::p_dot:
    case CoefficientSelector::q_dot: {
      // cos(w s)/eps^2 * e^{i k (tau - s)}
      g.terms = {{f.omega, -f.carrier}, {-f.omega, -f.carrier}};
      const Complex w = 1.0 / (2.0 * e2);
      g.weights = {w, w};
      g.prefactor = phase::cis(f.carrier, tau);
      g.ramp = which == CoefficientSelector::q_dot;
      break;
    }
  }
  return g;
}

inline bool same_terms(const std::vector<Term>& x, const std::vector<Term>& y) {
  if (x.size() != y.size()) return false;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (x[t].f1 != y[t].f1 || x[t].f2 != y[t].f2) return false;
  }
  return true;
}

}  // namespace detail

/// Evaluates several coefficient integrals; selectors whose integrands share
/// the same exponentials reuse one set of panel sums. Throws
/// ConvergenceFailure when the estimated error cannot be brought below
/// abs_tol, unless the Kronrod/Gauss discrepancy on every panel is already at
/// rounding level.
inline std::vector<QuadratureResult> quadrature_reference(
    const ModeFrequencies& f, double eps, double tau, std::span<const CoefficientSelector> which,
    const QuadratureOptions& opt) {
  check_eps(eps);
  if (!(tau >= 0.0)) throw ConfigError("quadrature_reference: tau must be >= 0");
  if (!(opt.periods_per_panel > 0.0) || opt.max_refinements < 0) {
    throw ConfigError("quadrature_reference: bad options");
  }
  std::vector<QuadratureResult> out(which.size());
  if (tau == 0.0) return out;

  std::vector<detail::Integrand> integrands;
  for (auto w : which) integrands.push_back(detail::integrand(f, eps, tau, w));
  std::vector<bool> done(which.size(), false);

  for (std::size_t lead = 0; lead < which.size(); ++lead) {
    if (done[lead]) continue;
    std::vector<std::size_t> group;
    for (std::size_t j = lead; j < which.size(); ++j) {
      if (!done[j] && detail::same_terms(integrands[j].terms, integrands[lead].terms)) {
        group.push_back(j);
      }
    }
    const auto& terms = integrands[lead].terms;
    std::int64_t panels = detail::initial_panels(terms, tau, opt.periods_per_panel);
    bool converged = false;
    for (int attempt = 0; attempt <= opt.max_refinements && !converged;
         ++attempt, panels *= 2) {
      const auto moments = detail::composite_moments(terms, tau, panels);
      converged = true;
      for (std::size_t j : group) {
        const auto& g = integrands[j];
        Complex value;
        double error = 0.0;
        bool at_rounding = true;
        for (std::size_t t = 0; t < terms.size(); ++t) {
          value += g.weights[t] * (g.ramp ? moments[t].ramp : moments[t].flat);
          error += std::abs(g.weights[t]) * moments[t].error;
          at_rounding = at_rounding && moments[t].roundoff_limited;
        }
        out[j] = {g.prefactor * value, error, panels};
        converged = converged && (error <= opt.abs_tol || at_rounding);
      }
    }
    if (!converged) {
      throw ConvergenceFailure("quadrature_reference: tolerance " +
                               std::to_string(opt.abs_tol) + " not reached");
    }
    for (std::size_t j : group) done[j] = true;
  }
  return out;
}

inline QuadratureResult quadrature_reference(const ModeFrequencies& f, double eps,
                                             double tau, CoefficientSelector which,
                                             const QuadratureOptions& opt) {
  return quadrature_reference(f, eps, tau, std::span<const CoefficientSelector>(&which, 1),
                              opt)[0];
}

inline QuadratureResult quadrature_reference(const ModeFrequencies& f, double eps,
                                             double tau, CoefficientSelector which,
                                             double abs_tol = 1e-13) {
  QuadratureOptions opt;
  opt.abs_tol = abs_tol;
  return quadrature_reference(f, eps, tau, which, opt);
}

}  // namespace mtifp
