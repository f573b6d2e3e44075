// u(0, t) for a few eps with real Gaussian data; run plot_traces.py in the
// output directory to draw them.

#include <cstdio>

#include "mtifp/harness.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "traces";
  mtifp::TraceSpec spec;
  spec.eps_values = {1.0, 0.5, 0.25, 0.125};
  spec.tau = 1e-3;
  spec.t_final = 10.0;
  for (const auto& tr : mtifp::emit_traces(spec, dir)) {
    std::printf("eps = %-6g period of u(0, t) ~ %.4f  (eps^2 2 pi = %.4f)\n", tr.eps,
                mtifp::dominant_period(tr), tr.eps * tr.eps * 2.0 * 3.141592653589793);
  }
  std::printf("written to %s\n", dir.string().c_str());
}
