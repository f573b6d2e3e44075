#pragma once

// Reference solutions.
//
// mode_ode_solve integrates the truncated Fourier system
//     eps^2 u_l'' + (mu_l^2 + 1/eps^2) u_l + (lambda |u|^2 u)^_l = 0
// with an adaptive Runge-Kutta-Fehlberg 7(8) pair, independently of the
// multiscale scheme. reference_solution runs the scheme itself on a fine grid
// with a tiny step and keeps the result in a content-hashed file store.

#include <openssl/evp.h>

#include <boost/numeric/odeint.hpp>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mtifp/errors.hpp"
#include "mtifp/solver.hpp"
#include "mtifp/spectral.hpp"

namespace mtifp {

struct OracleConfig {
  GridSpec grid{-16.0, 16.0, 128};
  double eps = 0.5;
  double t_final = 1.0;
  double lambda = 1.0;
  double rel_tol = 1e-11;
  double abs_tol = 1e-11;
  std::int64_t max_steps = 5'000'000;
};

inline void validate(const OracleConfig& c) {
  (void)c.grid.make();
  check_eps(c.eps);
  if (!(c.t_final >= 0.0)) throw ConfigError("oracle: T must be >= 0");
  if (!std::isfinite(c.lambda)) throw ConfigError("oracle: lambda must be finite");
  for (double tol : {c.rel_tol, c.abs_tol}) {
    if (!(tol >= 1e-13 && tol <= 1e-6)) {
      throw ConfigError("oracle: tolerances must lie in [1e-13, 1e-6]");
    }
  }
  if (c.max_steps <= 0) throw ConfigError("oracle: max_steps must be positive");
}

namespace detail {

/// Right-hand side on the real vector [Re u, Im u, Re v, Im v] (slot order).
class ModeSystem {
 public:
  ModeSystem(const SpectralGrid& grid, double eps, double lambda)
      : fft_(grid.size()), lambda_(lambda), e2_(eps * eps), n_(grid.size()) {
    const auto n = static_cast<std::size_t>(grid.size());
    omega2_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double mu = grid.mu_at_slot(k);
      omega2_[k] = (mu * mu + 1.0 / e2_) / e2_;
    }
    coeffs_.resize(n);
    nodal_.resize(n);
    forcing_.resize(n);
  }

  void operator()(const std::vector<double>& x, std::vector<double>& dx, double) {
    const std::size_t n = n_;
    for (std::size_t k = 0; k < n; ++k) coeffs_[k] = {x[k], x[n + k]};
    fft_.backward(coeffs_, nodal_);
    for (auto& v : nodal_) v = lambda_ * std::norm(v) * v;
    fft_.forward(nodal_, forcing_);
    for (std::size_t k = 0; k < n; ++k) {
      dx[k] = x[2 * n + k];
      dx[n + k] = x[3 * n + k];
      const Complex acc = -omega2_[k] * Complex(x[k], x[n + k]) - forcing_[k] / e2_;
      dx[2 * n + k] = acc.real();
      dx[3 * n + k] = acc.imag();
    }
  }

 private:
  Transform fft_;
  double lambda_;
  double e2_;
  std::size_t n_;
  std::vector<double> omega2_;
  ComplexVector coeffs_, nodal_, forcing_;
};

}  // namespace detail

/// Integrates from `initial` (taken at t = 0) to config.t_final.
/// Throws ConvergenceFailure when max_steps attempts are exhausted.
inline SolverState mode_ode_solve(const OracleConfig& config, const SolverState& initial) {
  validate(config);
  const auto grid = config.grid.make();
  if (!(initial.u.grid() == grid)) throw ShapeError("mode_ode_solve: grid mismatch");
  const std::size_t n = static_cast<std::size_t>(grid.size());

  std::vector<double> x(4 * n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = initial.u.slots()[k].real();
    x[n + k] = initial.u.slots()[k].imag();
    x[2 * n + k] = initial.u_dot.slots()[k].real();
    x[3 * n + k] = initial.u_dot.slots()[k].imag();
  }

  namespace ode = boost::numeric::odeint;
  using Stepper = ode::runge_kutta_fehlberg78<std::vector<double>>;
  auto controlled = ode::make_controlled(config.abs_tol, config.rel_tol, Stepper());
  detail::ModeSystem system(grid, config.eps, config.lambda);

  double t = 0.0;
  const double end = config.t_final;
  double dt = std::min(end, config.eps * config.eps * 1e-2);
  std::int64_t attempts = 0;
  while (t < end) {
    if (++attempts > config.max_steps) {
      throw ConvergenceFailure("mode_ode_solve: step budget exhausted at t = " +
                               std::to_string(t));
    }
    // try_step advances t on success and leaves the next suggested size in trial
    double trial = std::min(dt, end - t);
    const bool last = trial == end - t;
    if (controlled.try_step(std::ref(system), x, t, trial) == ode::success && last) t = end;
    dt = trial;
  }

  SolverState out(grid);
  for (std::size_t k = 0; k < n; ++k) {
    out.u.slots()[k] = {x[k], x[n + k]};
    out.u_dot.slots()[k] = {x[2 * n + k], x[3 * n + k]};
  }
  return out;
}

/// Identifies one stored fine-resolution run.
struct ReferenceSpec {
  double eps = 0.5;
  GridSpec grid{-16.0, 16.0, 1024};
  double tau = 5e-6;
  double t_final = 1.0;
  double lambda = 1.0;
  InitialData data = InitialData::gaussian_pair;
  Phi2Convention phi2_convention = Phi2Convention::eps_independent;

  SolverConfig solver_config() const {
    SolverConfig c;
    c.grid = grid;
    c.eps = eps;
    c.tau = tau;
    c.t_final = t_final;
    c.lambda = lambda;
    c.data = data;
    c.phi2_convention = phi2_convention;
    c.real_fast_path = data == InitialData::real_gaussian;
    return c;
  }
};

/// Shortest decimal that reads back as the same double.
inline std::string shortest(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

inline constexpr std::array<char, 8> kStoreMagic = {'M', 'T', 'I', 'F', 'P', 'R', 'E', 'F'};
inline constexpr std::uint32_t kStoreVersion = 1;
// forward transform carries 1/N, modes l = -N/2 .. N/2-1 stored in that order
inline constexpr std::uint32_t kDftConvention = 1;

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<unsigned char>(v >> (8 * b)));
  }
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(v >> (8 * b)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* p, std::size_t n) { bytes.insert(bytes.end(), p, p + n); }

  std::vector<unsigned char> bytes;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& b) : bytes_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * b);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * b);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool raw_equals(const char* p, std::size_t n) {
    need(n);
    bool same = std::equal(p, p + n, bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ += n;
    return same;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw StoreError("reference file truncated");
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

inline std::array<unsigned char, 32> sha256(const unsigned char* data, std::size_t n) {
  std::array<unsigned char, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(data, n, out.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32) {
    throw StoreError("sha256 failed");
  }
  return out;
}

}  // namespace detail

/// Reference states in a directory, one file per (eps, N) key. Files are a
/// little-endian binary container: magic, version, DFT convention, run
/// metadata, u and u_dot coefficients (l = -N/2 .. N/2-1, re/im interleaved)
/// and a SHA-256 trailer over all preceding bytes.
class ReferenceStore {
 public:
  explicit ReferenceStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  /// Directory from MTIFP_REFERENCE_DIR, else `fallback`.
  static ReferenceStore from_environment(const std::filesystem::path& fallback) {
    if (const char* env = std::getenv("MTIFP_REFERENCE_DIR"); env != nullptr && *env != '\0') {
      return ReferenceStore(env);
    }
    return ReferenceStore(fallback);
  }

  const std::filesystem::path& directory() const { return dir_; }

  static std::string key(const ReferenceSpec& spec) {
    return "ref_eps" + shortest(spec.eps) + "_N" + std::to_string(spec.grid.n);
  }

  std::filesystem::path path_for(const ReferenceSpec& spec) const {
    return dir_ / (key(spec) + ".bin");
  }

  std::vector<unsigned char> encode(const ReferenceSpec& spec, const SolverState& state) const {
    detail::ByteWriter w;
    w.raw(detail::kStoreMagic.data(), detail::kStoreMagic.size());
    w.u32(detail::kStoreVersion);
    w.u32(detail::kDftConvention);
    w.f64(spec.grid.a);
    w.f64(spec.grid.b);
    w.i64(spec.grid.n);
    w.f64(spec.eps);
    w.f64(spec.tau);
    w.f64(spec.t_final);
    w.f64(spec.lambda);
    w.u32(static_cast<std::uint32_t>(spec.data));
    w.u32(static_cast<std::uint32_t>(spec.phi2_convention));
    w.i64(state.step_index);
    for (const FieldHat* f : {&state.u, &state.u_dot}) {
      const auto& g = f->grid();
      for (int l = g.min_mode(); l <= g.max_mode(); ++l) {
        w.f64((*f)[l].real());
        w.f64((*f)[l].imag());
      }
    }
    const auto digest = detail::sha256(w.bytes.data(), w.bytes.size());
    w.bytes.insert(w.bytes.end(), digest.begin(), digest.end());
    return w.bytes;
  }

  SolverState decode(const ReferenceSpec& spec, const std::vector<unsigned char>& bytes) const {
    if (bytes.size() < 32) throw StoreError("reference file truncated");
    const std::size_t body = bytes.size() - 32;
    const auto digest = detail::sha256(bytes.data(), body);
    if (!std::equal(digest.begin(), digest.end(), bytes.begin() + static_cast<std::ptrdiff_t>(body))) {
      throw StoreError("reference file hash mismatch");
    }
    detail::ByteReader r(bytes);
    if (!r.raw_equals(detail::kStoreMagic.data(), detail::kStoreMagic.size())) {
      throw StoreError("not a reference file");
    }
    if (r.u32() != detail::kStoreVersion) throw StoreError("unsupported reference version");
    if (r.u32() != detail::kDftConvention) throw StoreError("unexpected DFT convention");
    ReferenceSpec got;
    got.grid.a = r.f64();
    got.grid.b = r.f64();
    got.grid.n = static_cast<int>(r.i64());
    got.eps = r.f64();
    got.tau = r.f64();
    got.t_final = r.f64();
    got.lambda = r.f64();
    got.data = static_cast<InitialData>(r.u32());
    got.phi2_convention = static_cast<Phi2Convention>(r.u32());
    const std::int64_t steps = r.i64();
    if (!(got.grid == spec.grid) || got.eps != spec.eps || got.tau != spec.tau ||
        got.t_final != spec.t_final || got.lambda != spec.lambda || got.data != spec.data ||
        got.phi2_convention != spec.phi2_convention) {
      throw StoreError("reference metadata does not match the requested scenario");
    }
    const auto grid = got.grid.make();
    SolverState state(grid);
    state.step_index = steps;
    for (FieldHat* f : {&state.u, &state.u_dot}) {
      for (int l = grid.min_mode(); l <= grid.max_mode(); ++l) {
        const double re = r.f64();
        const double im = r.f64();
        (*f)[l] = {re, im};
      }
    }
    if (r.position() != body) throw StoreError("reference file has trailing data");
    return state;
  }

  std::optional<SolverState> load(const ReferenceSpec& spec) const {
    const auto path = path_for(spec);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return decode(spec, bytes);
  }

  void save(const ReferenceSpec& spec, const SolverState& state) const {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw StoreError("cannot create " + dir_.string() + ": " + ec.message());
    const auto bytes = encode(spec, state);
    const auto path = path_for(spec);
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw StoreError("cannot write " + tmp.string());
      out.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
      if (!out) throw StoreError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw StoreError("cannot rename " + tmp.string() + ": " + ec.message());
  }

  /// Mutex serializing work on one key across threads of this process.
  static std::mutex& key_mutex(const std::string& key) {
    static std::mutex guard;
    static std::map<std::string, std::unique_ptr<std::mutex>> locks;
    std::lock_guard lock(guard);
    auto& slot = locks[key];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
  }

 private:
  std::filesystem::path dir_;
};

/// Loads the stored reference for `spec`, computing and storing it first if
/// absent.
inline SolverState reference_solution(const ReferenceSpec& spec, const ReferenceStore& store) {
  std::lock_guard lock(ReferenceStore::key_mutex(store.path_for(spec).string()));
  if (auto hit = store.load(spec)) return std::move(*hit);
  SolverState state = propagate(spec.solver_config());
  store.save(spec, state);
  return state;
}

}  // namespace mtifp
