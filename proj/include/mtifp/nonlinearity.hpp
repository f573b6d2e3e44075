#pragma once

// Pointwise kernels of the cubic nonlinearity f(u) = lambda |u|^2 u split by
// frequency. With u = e^{is/eps^2} z+ + e^{-is/eps^2} conj(z-) + r,
//
//   f(u) = e^{is/eps^2} f+ + e^{-is/eps^2} conj(f-)
//        + e^{3is/eps^2} g+ + e^{-3is/eps^2} conj(g-) + w.
//
// All kernels act on nodal values; transforms are the caller's business.

#include <complex>

namespace mtifp {

using Complex = std::complex<double>;

struct CubicParams {
  double lambda = 1.0;
};

struct ComplexPair {
  Complex plus;
  Complex minus;
};

inline Complex cubic(Complex u, const CubicParams& params) {
  return params.lambda * std::norm(u) * u;
}

inline ComplexPair f_pm(Complex zp, Complex zm, const CubicParams& params) {
  const double np = std::norm(zp);
  const double nm = std::norm(zm);
  return {params.lambda * (np + 2.0 * nm) * zp, params.lambda * (nm + 2.0 * np) * zm};
}

/// s-derivative of f_pm along (zp_dot, zm_dot).
inline ComplexPair fdot_pm(Complex zp, Complex zm, Complex zp_dot, Complex zm_dot,
                           const CubicParams& params) {
  const double lam = params.lambda;
  const double sp = (std::conj(zp) * zp_dot).real();
  const double sm = (std::conj(zm) * zm_dot).real();
  const double np = std::norm(zp);
  const double nm = std::norm(zm);
  return {2.0 * lam * zp * (sp + 2.0 * sm) + lam * zp_dot * (np + 2.0 * nm),
          2.0 * lam * zm * (sm + 2.0 * sp) + lam * zm_dot * (nm + 2.0 * np)};
}

inline ComplexPair g_pm(Complex zp, Complex zm, const CubicParams& params) {
  return {params.lambda * zp * zp * zm, params.lambda * zm * zm * zp};
}

inline ComplexPair gdot_pm(Complex zp, Complex zm, Complex zp_dot, Complex zm_dot,
                           const CubicParams& params) {
  const double lam = params.lambda;
  return {2.0 * lam * zp * zm * zp_dot + lam * zp * zp * zm_dot,
          2.0 * lam * zm * zp * zm_dot + lam * zm * zm * zp_dot};
}

/// Two-wave part of u at local time s: e^{is/eps^2} zp + e^{-is/eps^2} conj(zm).
inline Complex carrier_waves(Complex zp, Complex zm, double s, double eps) {
  const Complex rot = std::polar(1.0, s / (eps * eps));
  return rot * zp + std::conj(rot * zm);
}

inline Complex w_remainder(Complex zp, Complex zm, Complex r, double s, double eps,
                           const CubicParams& params) {
  if (r == Complex(0.0)) return 0.0;
  const Complex v = carrier_waves(zp, zm, s, eps);
  return cubic(v + r, params) - cubic(v, params);
}

/// Five-term assembly of f(u); a test oracle for the split.
inline Complex reconstruct_f(Complex zp, Complex zm, Complex r, double s, double eps,
                             const CubicParams& params) {
  const Complex rot = std::polar(1.0, s / (eps * eps));
  const Complex rot3 = rot * rot * rot;
  const auto f = f_pm(zp, zm, params);
  const auto g = g_pm(zp, zm, params);
  return rot * f.plus + std::conj(rot * f.minus) + rot3 * g.plus +
         std::conj(rot3 * g.minus) + w_remainder(zp, zm, r, s, eps, params);
}

}  // namespace mtifp
