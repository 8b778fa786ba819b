// Acceptance run: one [PASS]/[FAIL] line per criterion.
//
//   acceptance            criteria 1-8, 10, 11
//   acceptance --only 9   the long scaling run
//   acceptance --all      everything

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qwsearch/qwsearch.hpp"

using namespace qws;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    detail << "    " << (ok ? "ok   " : "FAIL ") << what << '\n';
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

RunSettings settings(std::size_t m, std::uint64_t seed = 2024) {
  RunSettings s;
  s.trajectories = m;
  s.seed = seed;
  return s;
}

void noiseless_peak(Outcome& o, StarTarget where, bool star) {
  for (int n : {4, 10, 100}) {
    const Graph g = star ? star_graph(n, where) : complete_graph(n);
    const SearchParameters p = search_parameters(g, 0.0);
    const Eigen::MatrixXd h = noiseless_hamiltonian(g, p);
    const double t_opt = optimal_time(n);
    const double at_opt = evolve_static(h, uniform_state(n), TimeGrid(t_opt, 2), p.target).p[1];
    const TimeGrid grid = default_grid(n);
    const SearchMetrics m = extract_metrics(evolve_static(h, uniform_state(n), grid, p.target));
    o.require(at_opt >= 1.0 - 1e-6, fmt("N=%d p(pi sqrt(N)/2) = %.12f", n, at_opt));
    o.require(std::abs(m.t_max - t_opt) <= grid.step(),
              fmt("N=%d t_max = %.6f vs %.6f (grid step %.4f)", n, m.t_max, t_opt, grid.step()));
  }
}

void c1(Outcome& o) { noiseless_peak(o, StarTarget::central, false); }
void c2(Outcome& o) { noiseless_peak(o, StarTarget::central, true); }

void c3(Outcome& o) {
  // Horizon of one period: later revivals can exceed the first peak.
  std::vector<std::pair<double, double>> failure;
  for (int n : {8, 16, 32, 64, 128}) {
    const Graph g = star_graph(n, StarTarget::external);
    const SearchParameters p = search_parameters(g, 0.0);
    const SearchMetrics m = extract_metrics(
        evolve_static(noiseless_hamiltonian(g, p), uniform_state(n), default_grid(n, 2.0, 4096), p.target));
    const double expected = 1.0 - 1.0 / (double(n) * n);
    const double ratio = m.t_max / optimal_time(n);
    o.require(std::abs(m.p_succ - expected) <= 1e-2,
              fmt("N=%d p_succ = %.6f vs 1 - N^-2 = %.6f", n, m.p_succ, expected));
    o.require(ratio >= 0.9 && ratio <= 1.1, fmt("N=%d t_max / (pi sqrt(N)/2) = %.4f", n, ratio));
    failure.emplace_back(n, 1.0 - m.p_succ);
  }
  const ScalingFit fit = fit_scaling(failure);
  o.require(std::abs(fit.exponent + 2.0) <= 0.1, fmt("slope of 1 - p_succ vs N = %.4f", fit.exponent));
}

void c4(Outcome& o) {
  const std::size_t m = 100000;
  const double mu = 1.0;
  std::vector<LinkTrajectory> sample;
  sample.reserve(m);
  for (std::size_t i = 0; i < m; ++i) sample.push_back(sample_link(mu, 5.0, substream_key(77, i)));
  const PoissonTest t = poisson_switch_count_test(sample, mu);
  o.require(t.p_value > 1e-3, fmt("switch counts chi2 = %.2f, dof = %d, p = %.4f", t.chi_square, t.dof, t.p_value));
  for (double tau : {0.1, 0.5, 1.0}) {
    const double rho = autocorrelation_estimate(sample, tau, 1.0);
    const double expected = std::exp(-2.0 * mu * tau);
    const double se = autocorrelation_std_error(expected, m);
    o.require(std::abs(rho - expected) <= 3.0 * se,
              fmt("tau=%.1f autocorrelation %.5f vs %.5f (%.2f sigma)", tau, rho, expected, (rho - expected) / se));
  }
}

void c5(Outcome& o) {
  const SweepRow r = run_point(complete_graph(10), 0.01, 1.0, settings(5000));
  o.require(r.metrics.p_succ >= 0.55 && r.metrics.p_succ <= 0.65,
            fmt("p_succ = %.4f +- %.4f (M=%zu)", r.metrics.p_succ, r.metrics.stderr_p, r.trajectories));
}

void c6(Outcome& o) {
  const SweepRow r = run_point(complete_graph(10), 10.0, 0.2, settings(5000));
  o.require(r.metrics.p_succ >= 0.9,
            fmt("p_succ = %.4f +- %.4f (M=%zu)", r.metrics.p_succ, r.metrics.stderr_p, r.trajectories));
}

void c7(Outcome& o) {
  std::vector<SweepRow> rows;
  for (double nu : {0.2, 0.5, 0.9, 1.0}) {
    rows.push_back(run_point(complete_graph(10), 0.01, nu, settings(5000)));
    o.detail << fmt("    nu=%.1f p_succ = %.4f +- %.4f\n", nu, rows.back().metrics.p_succ,
                    rows.back().metrics.stderr_p);
  }
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const auto& a = rows[i].metrics;
    const auto& b = rows[i + 1].metrics;
    const double sigma = std::hypot(a.stderr_p, b.stderr_p);
    o.require(a.p_succ - b.p_succ > 3.0 * sigma,
              fmt("nu %.1f -> %.1f drop %.4f > 3 sigma = %.4f", rows[i].nu, rows[i + 1].nu, a.p_succ - b.p_succ,
                  3.0 * sigma));
  }
}

void c8(Outcome& o) {
  const Graph g = star_graph(6, StarTarget::external);
  const EnsembleConfig cfg = make_config(g, 1e-4, 1.0, settings(20000));
  const EnsembleTrace e = run_ensemble(cfg);
  const ProbabilityTrace exact = semi_static_oracle(g, cfg.params, cfg.grid);
  std::size_t outside = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < cfg.grid.samples; ++k) {
    const double dev = std::abs(e.trace.p[k] - exact.p[k]);
    const double bound = 3.0 * e.trace.std_error[k] + 1e-12;
    if (dev > bound) ++outside;
    if (dev > 1e-12) worst = std::max(worst, dev / e.trace.std_error[k]);
  }
  o.require(outside == 0, fmt("%zu of %zu grid points outside 3 sigma (largest deviation %.2f sigma)", outside,
                              cfg.grid.samples, worst));
}

void c9(Outcome& o) {
  // Reduced ensembles; error bars on T are propagated from p_succ.
  for (const char* family : {"complete", "star-external"}) {
    const GraphSpec spec = GraphSpec::parse(family);
    std::vector<std::pair<double, double>> points;
    run_sweep(spec, {8, 16, 32, 64}, {0.01}, {1.0}, settings(2000), [&](const SweepRow& r) {
      const double rel = r.metrics.stderr_p / r.metrics.p_succ;
      o.detail << fmt("    %s N=%d p_succ = %.4f +- %.4f t_max = %.3f T = %.3f +- %.3f\n", family, r.n,
                      r.metrics.p_succ, r.metrics.stderr_p, r.metrics.t_max, r.metrics.avg_running_time,
                      rel * r.metrics.avg_running_time);
      points.emplace_back(r.n, r.metrics.avg_running_time);
    });
    const ScalingFit fit = fit_scaling(points);
    if (spec.kind == GraphKind::complete)
      o.require(std::abs(fit.exponent - 0.5) <= 0.15, fmt("complete: T ~ N^%.3f (want 0.5 +- 0.15)", fit.exponent));
    else
      o.require(fit.exponent >= 0.8, fmt("star-external: T ~ N^%.3f (want >= 0.8)", fit.exponent));
  }
}

void c10(Outcome& o) {
  for (int n : {100, 1000, 10000}) {
    const theory::PerturbativeSpectrum p = theory::perturbed_pairs(n);
    const double e0 = p.exact_energies(0), e1 = p.exact_energies(1);
    const double root = std::sqrt(double(n));
    o.require(std::abs(e0 + 1.0 / root) <= 10.0 / n, fmt("N=%d |E0 + 1/sqrt N| = %.3e", n, std::abs(e0 + 1.0 / root)));
    o.require(std::abs(e1 - 1.0 / root) <= 10.0 / n, fmt("N=%d |E1 - 1/sqrt N| = %.3e", n, std::abs(e1 - 1.0 / root)));
    if (n == 10000) {
      const double overlap = std::abs(p.exact_vectors.col(0).dot(p.lambda0));
      o.require(overlap >= 0.999, fmt("N=%d ground-state overlap = %.6f", n, overlap));
    }
    o.require(theory::krylov_invariance_residual(theory::reduce_star(n)) < 1e-10 * n,
              fmt("N=%d reduced subspace invariant", n));
  }
  for (int n : {100, 1000}) {
    double leak = 0.0;
    for (double f : {0.5, 1.0, 2.0}) leak = std::max(leak, theory::krylov_leakage(n, f * optimal_time(n)));
    o.require(leak < 1e-10, fmt("N=%d full-space Krylov leakage = %.3e", n, leak));
  }
}

void c11(Outcome& o) {
  const Graph g = complete_graph(10);
  RunSettings s = settings(100);
  s.backend = Backend::exact;
  const EnsembleConfig cfg = make_config(g, 1.0, 0.5, s);
  const BackendChoice stepped{Backend::stepped, 1e-3};
  double worst = 0.0;
  std::vector<double> mean_exact(cfg.grid.samples, 0.0), mean_stepped(cfg.grid.samples, 0.0);
  for (std::size_t i = 0; i < cfg.trajectories; ++i) {
    const ProbabilityTrace a = trajectory_trace(cfg, i, BackendChoice{Backend::exact, 0.0});
    const ProbabilityTrace b = trajectory_trace(cfg, i, stepped);
    for (std::size_t k = 0; k < cfg.grid.samples; ++k) {
      worst = std::max(worst, std::abs(a.p[k] - b.p[k]));
      mean_exact[k] += a.p[k];
      mean_stepped[k] += b.p[k];
    }
  }
  double worst_mean = 0.0;
  for (std::size_t k = 0; k < cfg.grid.samples; ++k)
    worst_mean = std::max(worst_mean, std::abs(mean_exact[k] - mean_stepped[k]) / cfg.trajectories);
  o.require(worst <= 1e-2, fmt("largest per-trajectory deviation %.3e", worst));
  o.require(worst_mean <= 1e-2, fmt("largest ensemble-mean deviation %.3e", worst_mean));
}

struct Criterion {
  int id;
  const char* name;
  void (*run)(Outcome&);
  bool expensive = false;
};

const std::vector<Criterion> kCriteria = {
    {1, "noiseless complete graph", c1},
    {2, "noiseless star, central target", c2},
    {3, "noiseless star, external target", c3},
    {4, "telegraph noise statistics", c4},
    {5, "slow noise on the complete graph", c5},
    {6, "fast weak noise on the complete graph", c6},
    {7, "monotonic in noise strength", c7},
    {8, "semi-static limit", c8},
    {9, "running-time scaling", c9, true},
    {10, "reduced star spectrum", c10},
    {11, "exact vs stepped backend", c11},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  bool all = false;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--all")) {
      all = true;
    } else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
      std::istringstream ids(argv[++i]);
      for (std::string id; std::getline(ids, id, ',');) only.insert(std::stoi(id));
    } else {
      std::cerr << "usage: acceptance [--all] [--only ID[,ID...]]\n";
      return 2;
    }
  }

  int failed = 0;
  for (const Criterion& c : kCriteria) {
    if (only.empty() ? (c.expensive && !all) : !only.count(c.id)) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("threw: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << ' ' << c.name << fmt(" (%.1f s)", secs) << '\n'
              << o.detail.str() << std::flush;
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
