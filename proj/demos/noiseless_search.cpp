// Noiseless search on the three graph families, then one noisy ensemble.

#include <iomanip>
#include <iostream>

#include "qwsearch/qwsearch.hpp"

int main() {
  using namespace qws;
  std::cout << std::fixed << std::setprecision(6);
  std::cout << "graph          N    p_succ    t_max   pi*sqrt(N)/2\n";
  for (int n : {10, 100}) {
    for (const Graph& g : {complete_graph(n), star_graph(n, StarTarget::central),
                           star_graph(n, StarTarget::external)}) {
      const SearchParameters p = search_parameters(g, 0.0);
      // Two quarter-periods keep only the first peak in view.
      const TimeGrid grid = default_grid(n, 2.0, 2048);
      const auto m = extract_metrics(evolve_static(noiseless_hamiltonian(g, p), uniform_state(n), grid, p.target));
      std::cout << std::left << std::setw(14) << to_string(g.kind()) << std::right << std::setw(4) << n
                << std::setw(10) << m.p_succ << std::setw(9) << m.t_max << std::setw(10) << optimal_time(n)
                << '\n';
    }
  }

  const Graph k10 = complete_graph(10);
  RunSettings s;
  s.trajectories = 2000;
  const SweepRow row = run_point(k10, 0.01, 1.0, s);
  std::cout << "\ncomplete N=10, mu=0.01, nu=1, M=2000: p_succ = " << row.metrics.p_succ << " +- "
            << row.metrics.stderr_p << ", T = " << row.metrics.avg_running_time << '\n';
  return 0;
}
