#include "mtifp/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace mtifp {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("mtifp_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

TEST(OracleConfig, ToleranceRange) {
  OracleConfig c;
  c.rel_tol = 1e-14;
  EXPECT_THROW(validate(c), ConfigError);
  c.rel_tol = 1e-5;
  EXPECT_THROW(validate(c), ConfigError);
  c.rel_tol = 1e-9;
  EXPECT_NO_THROW(validate(c));
}

TEST(ModeOde, LinearSingleMode) {
  OracleConfig c;
  c.grid = {-16.0, 16.0, 32};
  c.eps = 0.5;
  c.lambda = 0.0;
  c.t_final = 1.0;
  c.rel_tol = c.abs_tol = 1e-12;
  const auto g = c.grid.make();
  SolverState s0(g);
  s0.u[3] = Complex(0.5, -0.25);
  s0.u_dot[3] = Complex(1.0, 2.0);
  const auto s = mode_ode_solve(c, s0);
  const double w = mode_frequencies(c.eps, g.mu(3)).omega;
  const Complex exact = s0.u[3] * std::cos(w) + s0.u_dot[3] * std::sin(w) / w;
  EXPECT_LT(std::abs(s.u[3] - exact), 1e-10);
  for (int l = g.min_mode(); l <= g.max_mode(); ++l) {
    if (l != 3) {
      EXPECT_EQ(s.u[l], Complex(0.0));
    }
  }
}

TEST(ModeOde, StepBudgetIsReported) {
  OracleConfig c;
  c.grid = {-16.0, 16.0, 32};
  c.eps = 0.05;
  c.max_steps = 10;
  SolverConfig sc;
  sc.grid = c.grid;
  sc.eps = c.eps;
  EXPECT_THROW(mode_ode_solve(c, init(sc)), ConvergenceFailure);
}

TEST(ModeOde, ConservesEnergy) {
  OracleConfig c;
  c.grid = {-16.0, 16.0, 128};
  c.eps = 0.5;
  c.rel_tol = c.abs_tol = 1e-11;
  SolverConfig sc;
  sc.grid = c.grid;
  sc.eps = c.eps;
  const auto s0 = init(sc);
  const auto s1 = mode_ode_solve(c, s0);
  const double e0 = energy(s0, sc), e1 = energy(s1, sc);
  EXPECT_LE(std::abs(e1 - e0) / e0, 10.0 * c.rel_tol);
}

TEST(ModeOde, AgreesWithFineStepScheme) {
  OracleConfig c;
  c.grid = {-16.0, 16.0, 128};
  c.eps = 0.5;
  c.rel_tol = c.abs_tol = 1e-11;
  SolverConfig sc;
  sc.grid = c.grid;
  sc.eps = c.eps;
  sc.tau = 1e-5;
  sc.t_final = 1.0;
  const auto oracle = mode_ode_solve(c, init(sc));
  const auto scheme = propagate(sc);
  EXPECT_LE(sobolev_norm(oracle.u - scheme.u, 2), 1e-6);
}

ReferenceSpec small_spec(double eps) {
  ReferenceSpec spec;
  spec.eps = eps;
  spec.grid = {-16.0, 16.0, 64};
  spec.tau = 1e-3;
  spec.t_final = 0.05;
  return spec;
}

TEST(ReferenceStore, KeyAndRoundTrip) {
  EXPECT_EQ(ReferenceStore::key(ReferenceSpec{}), "ref_eps0.5_N1024");
  ReferenceSpec tiny;
  tiny.eps = 0.5 / 8192;
  EXPECT_EQ(ReferenceStore::key(tiny), "ref_eps6.103515625e-05_N1024");

  const ReferenceStore store(scratch_dir("roundtrip"));
  const auto spec = small_spec(0.25);
  std::mt19937 rng(1);
  std::normal_distribution<double> dist;
  SolverState s(spec.grid.make());
  for (auto& z : s.u.slots()) z = {dist(rng), dist(rng)};
  for (auto& z : s.u_dot.slots()) z = {dist(rng), dist(rng)};
  s.step_index = 50;
  store.save(spec, s);
  const auto back = store.load(spec);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->step_index, 50);
  for (std::size_t k = 0; k < 64; ++k) {
    EXPECT_EQ(back->u.slots()[k], s.u.slots()[k]);
    EXPECT_EQ(back->u_dot.slots()[k], s.u_dot.slots()[k]);
  }
  EXPECT_FALSE(store.load(small_spec(0.125)).has_value());
  fs::remove_all(store.directory());
}

TEST(ReferenceStore, DetectsCorruptionAndMismatch) {
  const ReferenceStore store(scratch_dir("corrupt"));
  const auto spec = small_spec(0.25);
  store.save(spec, SolverState(spec.grid.make()));
  auto other = spec;
  other.tau = 5e-4;
  EXPECT_THROW(store.load(other), StoreError);
  {
    std::fstream f(store.path_for(spec), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);
    f.put('\x7f');
  }
  EXPECT_THROW(store.load(spec), StoreError);
  fs::remove_all(store.directory());
}

TEST(ReferenceStore, EnvironmentOverride) {
  ::setenv("MTIFP_REFERENCE_DIR", "/tmp/mtifp_env_store", 1);
  EXPECT_EQ(ReferenceStore::from_environment("/nowhere").directory(), "/tmp/mtifp_env_store");
  ::unsetenv("MTIFP_REFERENCE_DIR");
  EXPECT_EQ(ReferenceStore::from_environment("/nowhere").directory(), "/nowhere");
}

TEST(ReferenceSolution, IsCachedBitIdentically) {
  const ReferenceStore store(scratch_dir("cache"));
  const auto spec = small_spec(0.5);
  const auto first = reference_solution(spec, store);
  std::ifstream in(store.path_for(spec), std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto second = reference_solution(spec, store);
  std::ifstream again(store.path_for(spec), std::ios::binary);
  const std::string bytes2((std::istreambuf_iterator<char>(again)),
                           std::istreambuf_iterator<char>());
  EXPECT_EQ(bytes, bytes2);
  for (std::size_t k = 0; k < 64; ++k) EXPECT_EQ(first.u.slots()[k], second.u.slots()[k]);
  const auto direct = propagate(spec.solver_config());
  for (std::size_t k = 0; k < 64; ++k) EXPECT_EQ(first.u.slots()[k], direct.u.slots()[k]);
  fs::remove_all(store.directory());
}

}  // namespace
}  // namespace mtifp
