#pragma once

// MTI-FP time stepping for
//     eps^2 u_tt - u_xx + u/eps^2 + lambda |u|^2 u = 0   on a periodic interval.
//
// One step: decompose (u^n, u_dot^n) into carrier waves and remainder, advance
// every mode with the exponential-integrator coefficients, evaluate the
// remainder coupling w at the new time, reassemble (u^{n+1}, u_dot^{n+1}).

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mtifp/errors.hpp"
#include "mtifp/ewi_coeffs.hpp"
#include "mtifp/mdf.hpp"
#include "mtifp/nonlinearity.hpp"
#include "mtifp/phase.hpp"
#include "mtifp/spectral.hpp"

namespace mtifp {

struct GridSpec {
  double a = -16.0;
  double b = 16.0;
  int n = 256;

  SpectralGrid make() const { return SpectralGrid(a, b, n); }
  bool operator==(const GridSpec&) const = default;
};

enum class InitialData {
  /// phi1 = (1+i) e^{-x^2/2}, phi2 = (3/2) e^{-x^2/2}
  gaussian_pair,
  /// phi1 = e^{-x^2/2}, phi2 = (3/2) phi1
  real_gaussian,
  zero,
  /// phi1/phi2 given node by node
  tabulated,
};

enum class Phi2Convention {
  /// u_t(0) = phi2 / eps^2 with phi2 independent of eps
  eps_independent,
  /// phi2 = 3 e^{-x^2/2} / (2 eps^2), then u_t(0) = phi2 / eps^2
  paper_section5_literal,
};

struct SolverConfig {
  GridSpec grid;
  double eps = 0.5;
  double tau = 1e-3;
  double t_final = 1.0;
  double lambda = 1.0;
  InitialData data = InitialData::gaussian_pair;
  std::vector<Complex> phi1_table;
  std::vector<Complex> phi2_table;
  Phi2Convention phi2_convention = Phi2Convention::eps_independent;
  bool real_fast_path = false;
  VelocityFilter filter = VelocityFilter::sin;
  bool dealias = false;
};

struct SolverState {
  FieldHat u;
  FieldHat u_dot;
  std::int64_t step_index = 0;

  explicit SolverState(const SpectralGrid& grid) : u(grid), u_dot(grid) {}
  SolverState(FieldHat u_, FieldHat u_dot_, std::int64_t n = 0)
      : u(std::move(u_)), u_dot(std::move(u_dot_)), step_index(n) {
    u.require_same_grid(u_dot);
  }

  double time(double tau) const { return static_cast<double>(step_index) * tau; }
};

/// round(T / tau); rejects step sizes that do not divide T to 1e-9 tau.
inline std::int64_t step_count(double t_final, double tau) {
  if (!(tau > 0.0) || !(t_final >= 0.0)) {
    throw ConfigError("step count: need tau > 0 and T >= 0");
  }
  const double ratio = t_final / tau;
  if (ratio > 9.0e15) throw ConfigError("step count: T/tau exceeds the step budget");
  const auto n = static_cast<std::int64_t>(std::llround(ratio));
  if (std::abs(static_cast<double>(n) * tau - t_final) > 1e-9 * tau) {
    throw ConfigError("tau = " + std::to_string(tau) + " does not divide T = " +
                      std::to_string(t_final));
  }
  return n;
}

inline void validate(const SolverConfig& c) {
  (void)c.grid.make();
  check_eps(c.eps);
  if (!(c.tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!(c.t_final > 0.0)) throw ConfigError("T must be > 0");
  if (!std::isfinite(c.lambda)) throw ConfigError("lambda must be finite");
  (void)step_count(c.t_final, c.tau);
  if (c.data == InitialData::tabulated) {
    const auto n = static_cast<std::size_t>(c.grid.n);
    if (c.phi1_table.size() != n || c.phi2_table.size() != n) {
      throw ConfigError("tabulated initial data must have exactly N = " +
                        std::to_string(c.grid.n) + " values per field");
    }
  }
}

inline SolverState init(const SolverConfig& config) {
  validate(config);
  const auto grid = config.grid.make();
  const auto n = static_cast<std::size_t>(grid.size());
  const double e2 = config.eps * config.eps;
  std::vector<Complex> phi1(n), phi2(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = grid.node(static_cast<int>(j));
    const double g = std::exp(-0.5 * x * x);
    switch (config.data) {
      case InitialData::gaussian_pair:
        phi1[j] = Complex(g, g);
        phi2[j] = config.phi2_convention == Phi2Convention::eps_independent
                      ? 1.5 * g
                      : 1.5 * g / e2;
        break;
      case InitialData::real_gaussian:
        phi1[j] = g;
        phi2[j] = config.phi2_convention == Phi2Convention::eps_independent
                      ? 1.5 * g
                      : 1.5 * g / e2;
        break;
      case InitialData::zero:
        break;
      case InitialData::tabulated:
        phi1[j] = config.phi1_table[j];
        phi2[j] = config.phi2_table[j];
        break;
    }
  }
  std::vector<Complex> u_dot(n);
  for (std::size_t j = 0; j < n; ++j) u_dot[j] = phi2[j] / e2;
  if (config.real_fast_path) {
    for (std::size_t j = 0; j < n; ++j) {
      if (phi1[j].imag() != 0.0 || phi2[j].imag() != 0.0) {
        throw ConfigError("real_fast_path requires real initial data");
      }
    }
  }
  return SolverState(to_spectral(grid, phi1), to_spectral(grid, u_dot), 0);
}

/// Preallocated MTI-FP stepper for one (grid, eps, tau, lambda).
class Stepper {
 public:
  explicit Stepper(const SolverConfig& config)
      : config_(config),
        grid_(config.grid.make()),
        coeffs_(grid_, config.eps, config.tau),
        fft_(grid_.size()),
        params_{config.lambda} {
    validate(config);
    const auto n = static_cast<std::size_t>(grid_.size());
    for (auto* v : buffers()) v->assign(n, Complex(0.0));
    rot_ = phase::cis(1.0 / (config.eps * config.eps), config.tau);
  }

  const SolverConfig& config() const { return config_; }
  const StepCoefficients& coefficients() const { return coeffs_; }

  /// Advances state by one step in place.
  void step(SolverState& state) {
    run(state.u.slots(), state.u_dot.slots());
    detail::assemble(config_.eps, rot_, zp1_, zm1_, zpd1_, zmd1_, r1_, rd1_,
                     state.u.slots(), state.u_dot.slots());
    ++state.step_index;
    check_finite(state);
  }

  /// Runs one step and returns the local unknowns at s = tau without
  /// reassembling.
  DecompositionState advance(const SolverState& state) {
    run(state.u.slots(), state.u_dot.slots());
    DecompositionState st(grid_);
    st.eps = config_.eps;
    st.stage = Stage::advanced;
    copy(zp1_, st.zp.slots());
    copy(zm1_, st.zm.slots());
    copy(zpd1_, st.zp_dot.slots());
    copy(zmd1_, st.zm_dot.slots());
    copy(r1_, st.r.slots());
    copy(rd1_, st.r_dot.slots());
    return st;
  }

  /// Heap bytes held by the workspace (coefficient table included).
  std::size_t workspace_bytes() const {
    const std::size_t per_buffer = zp0_.capacity() * sizeof(Complex);
    return kBufferCount * per_buffer +
           (static_cast<std::size_t>(grid_.size()) / 2 + 1) * sizeof(ModeStepCoefficients);
  }

 private:
  static constexpr std::size_t kBufferCount = 27;

  std::vector<ComplexVector*> buffers() {
    return {&zp0_, &zm0_, &fp_,  &fm_,  &zpd0_, &zmd0_, &fdp_, &fdm_, &gp_,  &gpd_,
            &gmc_, &gmdc_, &rd0_, &zp1_, &zm1_,  &zpd1_, &zmd1_, &r1_,  &rd1_, &wt_,
            &vt_,  &na_,  &nb_,  &nc_,  &nd_,   &ne_,   &nf_};
  }

  static void copy(std::span<const Complex> from, std::span<Complex> to) {
    std::copy(from.begin(), from.end(), to.begin());
  }

  void truncate(std::span<Complex> c) {
    if (config_.dealias) detail::truncate_two_thirds(grid_, c);
  }

  void run(std::span<const Complex> u, std::span<const Complex> u_dot) {
    const bool fast = config_.real_fast_path;
    const double e2 = config_.eps * config_.eps;
    const double tau = config_.tau;
    const std::size_t n = zp0_.size();

    // local initial data
    detail::split_carriers(u, u_dot, config_.eps, zp0_, zm0_);
    fft_.backward(zp0_, na_);
    if (fast) {
      copy(zp0_, zm0_);
      copy(na_, nb_);
    } else {
      fft_.backward(zm0_, nb_);
    }
    // na_/nb_ hold nodal z+/z-; nc_/nd_ receive f+/f-
    for (std::size_t j = 0; j < n; ++j) {
      const auto f = f_pm(na_[j], nb_[j], params_);
      nc_[j] = f.plus;
      nd_[j] = f.minus;
    }
    fft_.forward(nc_, fp_);
    truncate(fp_);
    if (fast) {
      copy(fp_, fm_);
    } else {
      fft_.forward(nd_, fm_);
      truncate(fm_);
    }
    detail::initial_velocity(grid_, tau, config_.filter, zp0_, fp_, zpd0_);
    if (fast) {
      copy(zpd0_, zmd0_);
    } else {
      detail::initial_velocity(grid_, tau, config_.filter, zm0_, fm_, zmd0_);
    }
    detail::remainder_velocity(zpd0_, zmd0_, rd0_);

    // nodal velocities -> fdot, g, gdot
    fft_.backward(zpd0_, nc_);
    if (fast) {
      copy(nc_, nd_);
    } else {
      fft_.backward(zmd0_, nd_);
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto fd = fdot_pm(na_[j], nb_[j], nc_[j], nd_[j], params_);
      const auto g = g_pm(na_[j], nb_[j], params_);
      const auto gd = gdot_pm(na_[j], nb_[j], nc_[j], nd_[j], params_);
      // reuse: na_ <- fdot+, nb_ <- fdot-, nc_ <- g+, nd_ <- gdot+,
      //        ne_ <- conj(g-), nf_ <- conj(gdot-)
      na_[j] = fd.plus;
      nb_[j] = fd.minus;
      nc_[j] = g.plus;
      nd_[j] = gd.plus;
      ne_[j] = std::conj(g.minus);
      nf_[j] = std::conj(gd.minus);
    }
    fft_.forward(na_, fdp_);
    fft_.forward(nc_, gp_);
    fft_.forward(nd_, gpd_);
    truncate(fdp_);
    truncate(gp_);
    truncate(gpd_);
    if (fast) {
      copy(fdp_, fdm_);
      conj_field(gp_, gmc_);
      conj_field(gpd_, gmdc_);
    } else {
      fft_.forward(nb_, fdm_);
      fft_.forward(ne_, gmc_);
      fft_.forward(nf_, gmdc_);
      truncate(fdm_);
      truncate(gmc_);
      truncate(gmdc_);
    }

    // per-mode exponential-integrator update
    for (std::size_t k = 0; k < n; ++k) {
      const auto& m = coeffs_.slot(k);
      const auto& ab = m.ab;
      const auto& fc = m.forcing;
      zp1_[k] = ab.a * zp0_[k] + e2 * ab.b * zpd0_[k] - fc.c * fp_[k] - fc.d * fdp_[k];
      zpd1_[k] = ab.a_dot * zp0_[k] + e2 * ab.b_dot * zpd0_[k] - fc.c_dot * fp_[k] -
                 fc.d_dot * fdp_[k];
      r1_[k] = m.sin_over_omega * rd0_[k] - fc.p * gp_[k] - fc.q * gpd_[k] -
               std::conj(fc.p) * gmc_[k] - std::conj(fc.q) * gmdc_[k];
      rd1_[k] = m.cos_omega_tau * rd0_[k] - fc.p_dot * gp_[k] - fc.q_dot * gpd_[k] -
                std::conj(fc.p_dot) * gmc_[k] - std::conj(fc.q_dot) * gmdc_[k];
    }
    if (fast) {
      copy(zp1_, zm1_);
      copy(zpd1_, zmd1_);
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        const auto& m = coeffs_.slot(k);
        const auto& ab = m.ab;
        const auto& fc = m.forcing;
        zm1_[k] = ab.a * zm0_[k] + e2 * ab.b * zmd0_[k] - fc.c * fm_[k] - fc.d * fdm_[k];
        zmd1_[k] = ab.a_dot * zm0_[k] + e2 * ab.b_dot * zmd0_[k] - fc.c_dot * fm_[k] -
                   fc.d_dot * fdm_[k];
      }
    }

    // w^{n+1} needs u^{n+1}, which depends on z^{n+1} and r^{n+1} only
    const Complex back = std::conj(rot_);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t kc = k == 0 ? 0 : n - k;
      vt_[k] = rot_ * zp1_[k] + back * std::conj(zm1_[kc]);
    }
    fft_.backward(vt_, na_);
    fft_.backward(r1_, nb_);
    for (std::size_t j = 0; j < n; ++j) {
      const Complex v = na_[j];
      nc_[j] = nb_[j] == Complex(0.0) ? Complex(0.0)
                                      : cubic(v + nb_[j], params_) - cubic(v, params_);
    }
    fft_.forward(nc_, wt_);
    truncate(wt_);
    const double w_weight = tau / (2.0 * e2);
    for (std::size_t k = 0; k < n; ++k) rd1_[k] -= w_weight * wt_[k];
  }

  void check_finite(const SolverState& state) const {
    double sum = 0.0;
    for (const auto& c : state.u.slots()) sum += std::norm(c);
    for (const auto& c : state.u_dot.slots()) sum += std::norm(c);
    if (!std::isfinite(sum)) throw DivergenceError(state.step_index, std::sqrt(sum));
  }

  SolverConfig config_;
  SpectralGrid grid_;
  StepCoefficients coeffs_;
  Transform fft_;
  CubicParams params_;
  Complex rot_;

  // spectral: local data at s = 0, forcing terms, local data at s = tau
  ComplexVector zp0_, zm0_, fp_, fm_, zpd0_, zmd0_, fdp_, fdm_, gp_, gpd_, gmc_, gmdc_,
      rd0_, zp1_, zm1_, zpd1_, zmd1_, r1_, rd1_, wt_, vt_;
  // nodal scratch
  ComplexVector na_, nb_, nc_, nd_, ne_, nf_;
};

/// One step from an explicit state with a coefficient table built for config.
inline SolverState step(const SolverState& state, const SolverConfig& config) {
  Stepper stepper(config);
  SolverState next = state;
  stepper.step(next);
  return next;
}

/// Callback invoked every `stride` steps (and at step 0).
struct Observer {
  std::int64_t stride = 1;
  std::function<void(std::int64_t step, double time, const SolverState& state)> callback;
};

inline SolverState propagate(const SolverConfig& config,
                             std::span<const Observer> observers = {}) {
  const std::int64_t steps = step_count(config.t_final, config.tau);
  SolverState state = init(config);
  Stepper stepper(config);
  auto notify = [&](std::int64_t n) {
    for (const auto& obs : observers) {
      if (obs.stride > 0 && n % obs.stride == 0) {
        obs.callback(n, static_cast<double>(n) * config.tau, state);
      }
    }
  };
  notify(0);
  for (std::int64_t n = 0; n < steps; ++n) {
    stepper.step(state);
    notify(state.step_index);
  }
  return state;
}

/// Discrete energy  int eps^2|u_t|^2 + |u_x|^2 + |u|^2/eps^2 + lambda|u|^4/2 dx
/// with the nodal trapezoid rule.
inline double energy(const SolverState& state, double eps, double lambda) {
  const auto& grid = state.u.grid();
  const double e2 = eps * eps;
  const auto u = from_spectral(state.u);
  const auto ux = from_spectral(spectral_derivative(state.u, 1));
  const auto ut = from_spectral(state.u_dot);
  double sum = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double rho = std::norm(u[j]);
    sum += e2 * std::norm(ut[j]) + std::norm(ux[j]) + rho / e2 + 0.5 * lambda * rho * rho;
  }
  return grid.h() * sum;
}

inline double energy(const SolverState& state, const SolverConfig& config) {
  return energy(state, config.eps, config.lambda);
}

/// u at a point x via the trigonometric interpolant.
inline Complex evaluate_at(const FieldHat& f, double x) {
  const auto& grid = f.grid();
  Complex sum;
  for (int l = grid.min_mode(); l <= grid.max_mode(); ++l) {
    sum += f[l] * std::polar(1.0, grid.mu(l) * (x - grid.a()));
  }
  return sum;
}

}  // namespace mtifp
