#pragma once

// Periodic Fourier grid, discrete transforms and Sobolev norms on [a, b).
//
// Coefficients follow the convention
//     v~_l = (1/N) sum_j v_j exp(-i mu_l (x_j - a)),   l = -N/2 .. N/2-1,
//     v_j  = sum_l v~_l exp(i mu_l (x_j - a)),
// with mu_l = 2 pi l / (b - a). Storage is in FFT order (index k holds l = k
// for k < N/2 and l = k - N otherwise); callers address modes through the
// logical index l.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtifp/errors.hpp"

namespace mtifp {

using Complex = std::complex<double>;

/// Allocator handing out SIMD-aligned storage so FFTW's new-array execute
/// functions can be used on any buffer.
template <typename T>
struct FftwAllocator {
  using value_type = T;

  FftwAllocator() noexcept = default;
  template <typename U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (p == nullptr && n != 0) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }

  template <typename U>
  bool operator==(const FftwAllocator<U>&) const noexcept {
    return true;
  }
};

using ComplexVector = std::vector<Complex, FftwAllocator<Complex>>;

class SpectralGrid {
 public:
  SpectralGrid(double a, double b, int n) : a_(a), b_(b), n_(n) {
    if (!(b > a) || !std::isfinite(a) || !std::isfinite(b)) {
      throw ConfigError("grid: require finite a < b");
    }
    if (n < 4 || n % 2 != 0) {
      throw ConfigError("grid: node count must be even and >= 4, got " +
                        std::to_string(n));
    }
  }

  double a() const { return a_; }
  double b() const { return b_; }
  int size() const { return n_; }
  double length() const { return b_ - a_; }
  double h() const { return (b_ - a_) / n_; }
  double node(int j) const { return a_ + j * h(); }

  int min_mode() const { return -n_ / 2; }
  int max_mode() const { return n_ / 2 - 1; }

  /// Storage slot of logical mode l.
  std::size_t slot(int l) const {
    return static_cast<std::size_t>(l >= 0 ? l : l + n_);
  }
  /// Logical mode held in storage slot k.
  int mode(std::size_t k) const {
    const int ik = static_cast<int>(k);
    return ik < n_ / 2 ? ik : ik - n_;
  }

  double mu(int l) const { return 2.0 * std::numbers::pi * l / length(); }
  double mu_at_slot(std::size_t k) const { return mu(mode(k)); }

  std::vector<double> nodes() const {
    std::vector<double> x(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) x[static_cast<std::size_t>(j)] = node(j);
    return x;
  }

  bool operator==(const SpectralGrid&) const = default;

 private:
  double a_;
  double b_;
  int n_;
};

inline SpectralGrid make_grid(double a, double b, int n) {
  return SpectralGrid(a, b, n);
}

namespace detail {

struct FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// FFTW planning is not thread safe; execution with the new-array interface
// is. Plans are created once per size and live for the process.
inline FftPlans plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, FftPlans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto* in = fftw_alloc_complex(static_cast<std::size_t>(n));
  auto* out = fftw_alloc_complex(static_cast<std::size_t>(n));
  FftPlans plans;
  plans.forward = fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
  plans.backward = fftw_plan_dft_1d(n, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  cache.emplace(n, plans);
  return plans;
}

inline fftw_complex* as_fftw(Complex* p) {
  return reinterpret_cast<fftw_complex*>(p);
}
inline fftw_complex* as_fftw(const Complex* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(p));
}

}  // namespace detail

/// Length-N transform pair in the grid's normalization. Input and output
/// must be distinct buffers allocated with FftwAllocator.
class Transform {
 public:
  explicit Transform(int n) : n_(n), plans_(detail::plans_for(n)) {}

  int size() const { return n_; }

  void forward(std::span<const Complex> nodal, std::span<Complex> coeffs) const {
    check(nodal.size(), coeffs.size());
    fftw_execute_dft(plans_.forward, detail::as_fftw(nodal.data()),
                     detail::as_fftw(coeffs.data()));
    const double scale = 1.0 / n_;
    for (auto& c : coeffs) c *= scale;
  }

  void backward(std::span<const Complex> coeffs, std::span<Complex> nodal) const {
    check(coeffs.size(), nodal.size());
    fftw_execute_dft(plans_.backward, detail::as_fftw(coeffs.data()),
                     detail::as_fftw(nodal.data()));
  }

 private:
  void check(std::size_t in, std::size_t out) const {
    if (in != static_cast<std::size_t>(n_) || out != static_cast<std::size_t>(n_)) {
      throw ShapeError("transform: buffer length does not match N=" +
                       std::to_string(n_));
    }
  }

  int n_;
  detail::FftPlans plans_;
};

/// Discrete Fourier coefficients of one complex field on a grid.
class FieldHat {
 public:
  explicit FieldHat(const SpectralGrid& grid)
      : grid_(grid), coeffs_(static_cast<std::size_t>(grid.size())) {}
  FieldHat(const SpectralGrid& grid, ComplexVector coeffs)
      : grid_(grid), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != static_cast<std::size_t>(grid_.size())) {
      throw ShapeError("FieldHat: coefficient count does not match grid");
    }
  }

  const SpectralGrid& grid() const { return grid_; }
  std::size_t size() const { return coeffs_.size(); }

  Complex& operator[](int l) { return coeffs_[grid_.slot(l)]; }
  const Complex& operator[](int l) const { return coeffs_[grid_.slot(l)]; }

  /// Raw storage in FFT order.
  std::span<Complex> slots() { return coeffs_; }
  std::span<const Complex> slots() const { return coeffs_; }

  FieldHat& operator+=(const FieldHat& o) {
    require_same_grid(o);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += o.coeffs_[k];
    return *this;
  }
  FieldHat& operator-=(const FieldHat& o) {
    require_same_grid(o);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= o.coeffs_[k];
    return *this;
  }
  FieldHat& operator*=(Complex s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  friend FieldHat operator+(FieldHat x, const FieldHat& y) { return x += y; }
  friend FieldHat operator-(FieldHat x, const FieldHat& y) { return x -= y; }
  friend FieldHat operator*(Complex s, FieldHat x) { return x *= s; }

  void require_same_grid(const FieldHat& o) const {
    if (!(o.grid_ == grid_)) throw ShapeError("fields live on different grids");
  }

 private:
  SpectralGrid grid_;
  ComplexVector coeffs_;
};

inline FieldHat to_spectral(const SpectralGrid& grid, std::span<const Complex> values) {
  if (values.size() != static_cast<std::size_t>(grid.size())) {
    throw ShapeError("to_spectral: expected " + std::to_string(grid.size()) +
                     " node values, got " + std::to_string(values.size()));
  }
  ComplexVector in(values.begin(), values.end());
  FieldHat out(grid);
  Transform(grid.size()).forward(in, out.slots());
  return out;
}

inline ComplexVector from_spectral(const FieldHat& f) {
  ComplexVector in(f.slots().begin(), f.slots().end());
  ComplexVector out(f.size());
  Transform(f.grid().size()).backward(in, out);
  return out;
}

/// Zero-pads (m > N) or truncates (m < N) the coefficient set onto an m-node
/// grid over the same interval.
inline FieldHat resample(const FieldHat& f, int m) {
  if (m < 4 || m % 2 != 0) {
    throw ConfigError("resample: target size must be even and >= 4");
  }
  const SpectralGrid target(f.grid().a(), f.grid().b(), m);
  FieldHat out(target);
  const int lo = std::max(f.grid().min_mode(), target.min_mode());
  const int hi = std::min(f.grid().max_mode(), target.max_mode());
  for (int l = lo; l <= hi; ++l) out[l] = f[l];
  return out;
}

/// Multiplies mode l by (i mu_l)^order.
inline FieldHat spectral_derivative(const FieldHat& f, int order) {
  if (order < 0) throw ConfigError("spectral_derivative: negative order");
  FieldHat out = f;
  auto s = out.slots();
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Complex im(0.0, f.grid().mu_at_slot(k));
    Complex factor = 1.0;
    for (int m = 0; m < order; ++m) factor *= im;
    s[k] *= factor;
  }
  return out;
}

/// Maps v~_l to conj(v~_{-l}), the coefficients of the conjugated nodal field.
/// The Nyquist mode maps onto itself.
inline void conj_field(std::span<const Complex> in, std::span<Complex> out) {
  const std::size_t n = in.size();
  out[0] = std::conj(in[0]);
  for (std::size_t k = 1; k < n; ++k) out[k] = std::conj(in[n - k]);
}

inline FieldHat conj_field(const FieldHat& f) {
  FieldHat out(f.grid());
  if (f.size() > 0) {
    // work on a copy so aliasing is harmless
    ComplexVector tmp(f.slots().begin(), f.slots().end());
    conj_field(tmp, out.slots());
  }
  return out;
}

/// Weight sum_{m=0..order} mu^{2m}; order 2 is the H^2 metric.
inline double sobolev_weight(double mu, int order) {
  const double m2 = mu * mu;
  switch (order) {
    case 0:
      return 1.0;
    case 1:
      return 1.0 + m2;
    case 2:
      return 1.0 + m2 + m2 * m2;
    default:
      throw ConfigError("sobolev_norm: order must be 0, 1 or 2");
  }
}

inline double sobolev_norm(const FieldHat& f, int order) {
  sobolev_weight(0.0, order);
  const auto& grid = f.grid();
  auto s = f.slots();
  double sum = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    sum += sobolev_weight(grid.mu_at_slot(k), order) * std::norm(s[k]);
  }
  return std::sqrt(sum);
}

}  // namespace mtifp
