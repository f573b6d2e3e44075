// Same coarse step for every eps: the error against a fine run stays bounded
// as eps shrinks, although the solution oscillates with period ~ eps^2.

#include <cstdio>

#include "mtifp/harness.hpp"

int main() {
  using namespace mtifp;
  SolverConfig coarse;
  coarse.grid.n = 128;
  coarse.t_final = 0.25;
  coarse.tau = 0.0125;
  std::printf("%-12s %-12s %-12s %s\n", "eps", "tau/eps^2", "H2 error", "steps");
  for (int k = 0; k <= 13; k += 1) {
    coarse.eps = std::ldexp(0.5, -k);
    SolverConfig fine = coarse;
    fine.tau = coarse.tau / 64.0;
    const auto a = propagate(coarse);
    const auto b = propagate(fine);
    std::printf("%-12.4g %-12.4g %-12.3e %lld\n", coarse.eps,
                coarse.tau / (coarse.eps * coarse.eps), error_norm(a, b),
                static_cast<long long>(a.step_index));
  }
}
