#pragma once

// Accurate complex exponentials for large oscillatory arguments.
//
// Step coefficients involve phases such as exp(i lambda tau) with
// lambda ~ 1/eps^2, so |lambda tau| can reach 1e7. The product and the sums of
// frequencies are carried as unevaluated pairs hi + lo, which keeps phases
// consistent with the stored double frequencies to a few ulps of the phase.

#include <array>
#include <cmath>
#include <complex>

namespace mtifp::phase {

using Complex = std::complex<double>;

/// Real number represented as hi + lo with |lo| <= ulp(hi)/2.
struct Split {
  double hi = 0.0;
  double lo = 0.0;

  double value() const { return hi + lo; }
  Split operator-() const { return {-hi, -lo}; }
};

/// Exact sum of two doubles.
inline Split two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

/// Exact product of two doubles.
inline Split two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

/// (hi + lo) * t with the rounding error of the leading product kept.
inline Split times(const Split& f, double t) {
  Split p = two_prod(f.hi, t);
  p.lo += f.lo * t;
  return p;
}

/// f * (hi + lo) for a split abscissa.
inline Split times(double f, const Split& t) {
  Split p = two_prod(f, t.hi);
  p.lo += f * t.lo;
  return p;
}

/// Product of two split numbers, dropping the lo * lo term.
inline Split times(const Split& a, const Split& b) {
  Split p = two_prod(a.hi, b.hi);
  p.lo += a.hi * b.lo + a.lo * b.hi;
  return p;
}

/// exp(i x) for x = hi + lo.
inline Complex cis(const Split& x) {
  const Complex head(std::cos(x.hi), std::sin(x.hi));
  const double e = x.lo;
  return head * Complex(1.0 - 0.5 * e * e, e);
}

inline Complex cis(double freq, double t) { return cis(two_prod(freq, t)); }

/// exp(i x) - 1 without cancellation for small x.
inline Complex expm1i(const Split& x) {
  if (std::abs(x.hi) < 1.0) {
    const double v = x.value();
    const double s = std::sin(0.5 * v);
    return {-2.0 * s * s, std::sin(v)};
  }
  return cis(x) - 1.0;
}

/// Below this |x| the phi functions use their power series.
inline constexpr double kSeriesThreshold = 0.5;

namespace detail {

// phi_k(i x) = sum_j (i x)^j / (j + k)!, 20 terms give < 1e-19 at |x| = 0.5.
template <int K>
Complex phi_series(double x) {
  constexpr int kTerms = 20;
  std::array<double, kTerms> inv_fact{};
  double f = 1.0;
  for (int m = 1; m <= K; ++m) f *= m;
  for (int j = 0; j < kTerms; ++j) {
    if (j > 0) f *= (j + K);
    inv_fact[static_cast<std::size_t>(j)] = 1.0 / f;
  }
  // Horner in z = i x
  const Complex z(0.0, x);
  Complex acc = inv_fact[kTerms - 1];
  for (int j = kTerms - 2; j >= 0; --j) acc = acc * z + inv_fact[static_cast<std::size_t>(j)];
  return acc;
}

}  // namespace detail

/// phi_1(i x) = (exp(i x) - 1) / (i x).
inline Complex phi1(const Split& x) {
  if (std::abs(x.hi) < kSeriesThreshold) return detail::phi_series<1>(x.value());
  return expm1i(x) / Complex(0.0, x.value());
}

/// phi_2(i x) = (exp(i x) - 1 - i x) / (i x)^2.
inline Complex phi2(const Split& x) {
  if (std::abs(x.hi) < kSeriesThreshold) return detail::phi_series<2>(x.value());
  const double v = x.value();
  return -(expm1i(x) - Complex(0.0, v)) / (v * v);
}

/// Closed-form branches only, for checking agreement at the switchover.
inline Complex phi1_direct(const Split& x) {
  return expm1i(x) / Complex(0.0, x.value());
}
inline Complex phi2_direct(const Split& x) {
  const double v = x.value();
  return -(expm1i(x) - Complex(0.0, v)) / (v * v);
}
inline Complex phi1_series(double x) { return detail::phi_series<1>(x); }
inline Complex phi2_series(double x) { return detail::phi_series<2>(x); }

}  // namespace mtifp::phase
