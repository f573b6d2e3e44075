#pragma once

// Multiscale decomposition by frequency for one time step.
//
// On [t_n, t_n + tau] the solution is written as
//     u(t_n + s) = e^{is/eps^2} z+(s) + e^{-is/eps^2} conj(z-(s)) + r(s).
// decompose() builds the well-prepared local data at s = 0 from (u, u_dot);
// reconstruct() reassembles (u, u_dot) from the local unknowns at time s.

#include <cmath>
#include <utility>

#include "mtifp/errors.hpp"
#include "mtifp/nonlinearity.hpp"
#include "mtifp/phase.hpp"
#include "mtifp/spectral.hpp"

namespace mtifp {

enum class VelocityFilter {
  /// (2/tau) sin(mu^2 tau / 2)
  sin,
  /// plain mu^2; loses two orders of spatial accuracy, kept for ablations
  unfiltered,
};

inline double velocity_filter(double mu, double tau) {
  if (!(tau > 0.0)) throw ConfigError("velocity_filter: tau must be > 0");
  return 2.0 / tau * std::sin(0.5 * mu * mu * tau);
}

inline double velocity_multiplier(double mu, double tau, VelocityFilter filter) {
  return filter == VelocityFilter::sin ? velocity_filter(mu, tau) : mu * mu;
}

enum class Stage { initial, advanced };

struct DecompositionState {
  FieldHat zp;
  FieldHat zm;
  FieldHat zp_dot;
  FieldHat zm_dot;
  FieldHat r;
  FieldHat r_dot;
  double eps = 1.0;
  Stage stage = Stage::initial;

  explicit DecompositionState(const SpectralGrid& grid)
      : zp(grid), zm(grid), zp_dot(grid), zm_dot(grid), r(grid), r_dot(grid) {}
};

namespace detail {

/// Zeroes modes with |l| > N/3 (2/3 rule).
inline void truncate_two_thirds(const SpectralGrid& grid, std::span<Complex> coeffs) {
  const int cut = grid.size() / 3;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    const int l = grid.mode(k);
    if (l > cut || l < -cut) coeffs[k] = 0.0;
  }
}

/// z+ = (u - i eps^2 u_dot)/2 and z- = (conj u - i eps^2 conj u_dot)/2, spectrally.
inline void split_carriers(std::span<const Complex> u, std::span<const Complex> u_dot,
                           double eps, std::span<Complex> zp, std::span<Complex> zm) {
  const std::size_t n = u.size();
  const Complex ie2(0.0, eps * eps);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t kc = k == 0 ? 0 : n - k;
    zp[k] = 0.5 * (u[k] - ie2 * u_dot[k]);
    zm[k] = 0.5 * (std::conj(u[kc]) - ie2 * std::conj(u_dot[kc]));
  }
}

/// z_dot = (i/2) (filter_l z + f).
inline void initial_velocity(const SpectralGrid& grid, double tau, VelocityFilter filter,
                             std::span<const Complex> z, std::span<const Complex> f,
                             std::span<Complex> z_dot) {
  const Complex half_i(0.0, 0.5);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double m = velocity_multiplier(grid.mu_at_slot(k), tau, filter);
    z_dot[k] = half_i * (m * z[k] + f[k]);
  }
}

/// r_dot = -zp_dot - conj_field(zm_dot).
inline void remainder_velocity(std::span<const Complex> zp_dot,
                               std::span<const Complex> zm_dot, std::span<Complex> r_dot) {
  const std::size_t n = zp_dot.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t kc = k == 0 ? 0 : n - k;
    r_dot[k] = -zp_dot[k] - std::conj(zm_dot[kc]);
  }
}

/// u = rot zp + conj(rot) conj_field(zm) + r, and the matching velocity.
inline void assemble(double eps, Complex rot, std::span<const Complex> zp,
                     std::span<const Complex> zm, std::span<const Complex> zp_dot,
                     std::span<const Complex> zm_dot, std::span<const Complex> r,
                     std::span<const Complex> r_dot, std::span<Complex> u,
                     std::span<Complex> u_dot) {
  const std::size_t n = zp.size();
  const Complex i_e2(0.0, 1.0 / (eps * eps));
  const Complex back = std::conj(rot);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t kc = k == 0 ? 0 : n - k;
    u[k] = rot * zp[k] + back * std::conj(zm[kc]) + r[k];
    u_dot[k] = rot * (zp_dot[k] + i_e2 * zp[k]) +
               back * std::conj(zm_dot[kc] + i_e2 * zm[kc]) + r_dot[k];
  }
}

}  // namespace detail

inline DecompositionState decompose(const FieldHat& u, const FieldHat& u_dot, double eps,
                                    double tau, const CubicParams& params,
                                    VelocityFilter filter = VelocityFilter::sin,
                                    bool dealias = false) {
  u.require_same_grid(u_dot);
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("decompose: eps must lie in (0, 1]");
  if (!(tau > 0.0)) throw ConfigError("decompose: tau must be > 0");
  const auto& grid = u.grid();
  const std::size_t n = u.size();
  const Transform fft(grid.size());

  DecompositionState st(grid);
  st.eps = eps;
  st.stage = Stage::initial;
  detail::split_carriers(u.slots(), u_dot.slots(), eps, st.zp.slots(), st.zm.slots());

  ComplexVector nzp(n), nzm(n), fp(n), fm(n);
  fft.backward(st.zp.slots(), nzp);
  fft.backward(st.zm.slots(), nzm);
  for (std::size_t j = 0; j < n; ++j) {
    const auto f = f_pm(nzp[j], nzm[j], params);
    nzp[j] = f.plus;
    nzm[j] = f.minus;
  }
  fft.forward(nzp, fp);
  fft.forward(nzm, fm);
  if (dealias) {
    detail::truncate_two_thirds(grid, fp);
    detail::truncate_two_thirds(grid, fm);
  }
  detail::initial_velocity(grid, tau, filter, st.zp.slots(), fp, st.zp_dot.slots());
  detail::initial_velocity(grid, tau, filter, st.zm.slots(), fm, st.zm_dot.slots());
  detail::remainder_velocity(st.zp_dot.slots(), st.zm_dot.slots(), st.r_dot.slots());
  return st;
}

/// (u, u_dot) at local time s. An initial-stage state is only valid at s = 0,
/// an advanced one only at s > 0.
inline std::pair<FieldHat, FieldHat> reconstruct(const DecompositionState& st, double eps,
                                                 double s) {
  if (st.stage == Stage::initial && s != 0.0) {
    throw ConfigError("reconstruct: initial-stage state can only be evaluated at s = 0");
  }
  if (st.stage == Stage::advanced && !(s > 0.0)) {
    throw ConfigError("reconstruct: advanced state needs s > 0");
  }
  FieldHat u(st.zp.grid());
  FieldHat u_dot(st.zp.grid());
  const Complex rot = phase::cis(1.0 / (eps * eps), s);
  detail::assemble(eps, rot, st.zp.slots(), st.zm.slots(), st.zp_dot.slots(),
                   st.zm_dot.slots(), st.r.slots(), st.r_dot.slots(), u.slots(),
                   u_dot.slots());
  return {std::move(u), std::move(u_dot)};
}

}  // namespace mtifp
