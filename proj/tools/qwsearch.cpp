// qwsearch: command-line driver for noisy quantum-walk search experiments.
//
//   qwsearch trace     --graph complete --n 10 --mu 0.01 --nu 1 --out trace.csv
//   qwsearch sweep     --graph star-external --n 8,16,32,64 --mu 0.01 --nu 0.2,1
//   qwsearch theory    --n 10,100,1000
//   qwsearch rtn-check --mu 1 --horizon 5 --trajectories 100000

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qwsearch/qwsearch.hpp"

namespace {

using namespace qws;

struct CommonFlags {
  std::string graph = "complete";
  std::optional<double> gamma;
  std::optional<std::size_t> trajectories;
  std::uint64_t seed = 1;
  std::size_t samples = 1024;
  double horizon_factor = 4.0;
  std::string backend = "auto";
  std::optional<double> step;
  unsigned workers = 0;
  std::string out = "-";

  RunSettings settings() const {
    RunSettings s;
    s.gamma = gamma;
    s.trajectories = trajectories;
    s.seed = seed;
    s.horizon_factor = horizon_factor;
    s.samples = samples;
    s.backend = backend == "exact" ? Backend::exact : backend == "stepped" ? Backend::stepped : Backend::automatic;
    s.step = step;
    s.workers = workers;
    return s;
  }
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--graph", f.graph, "complete | star-central | star-external | <edge-list path>");
  cmd->add_option("--gamma", f.gamma, "coupling override (default: noiseless optimum)");
  cmd->add_option("--trajectories", f.trajectories,
                  "noise realizations per point (default 10000 for mu >= 1, 20000 below)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--grid-samples", f.samples, "time samples")->check(CLI::Range(2, 1 << 24));
  cmd->add_option("--horizon-factor", f.horizon_factor,
                  "horizon in units of pi sqrt(N)/2")->check(CLI::PositiveNumber);
  cmd->add_option("--backend", f.backend, "propagation backend")
      ->check(CLI::IsMember({"exact", "stepped", "auto"}));
  cmd->add_option("--step", f.step, "step length for the stepped backend")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", f.workers, "worker threads (default: QWSEARCH_WORKERS or all cores)");
  cmd->add_option("--out", f.out, "output path, - for stdout");
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw IoError("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    stream().flush();
    if (!stream()) throw IoError("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int cmd_trace(const CommonFlags& f, int n, double mu, double nu, const std::string& dump_noise) {
  const GraphSpec spec = GraphSpec::parse(f.graph);
  const Graph g = spec.build(n);
  const EnsembleConfig cfg = make_config(g, mu, nu, f.settings());
  const EnsembleTrace e = run_ensemble(cfg);
  for (const auto& w : e.warnings) std::cerr << "warning: " << w << '\n';

  const ProbabilityTrace noiseless =
      evolve_static(noiseless_hamiltonian(g, cfg.params), uniform_state(g.order()), cfg.grid, cfg.params.target);
  const SearchMetrics m = extract_metrics(e);

  std::ostringstream comment;
  comment.precision(12);
  comment << "qwsearch trace " << describe(cfg) << '\n'
          << "resolved_backend=" << to_string(e.backend.backend);
  if (e.backend.backend == Backend::stepped) comment << " resolved_step=" << e.backend.step;
  comment << "\np_succ=" << m.p_succ << " p_stderr=" << m.stderr_p << " t_max=" << m.t_max
          << " avg_T=" << m.avg_running_time;

  Output out(f.out);
  write_trace_csv(out.stream(), e, comment.str(), &noiseless);
  out.close();

  if (!dump_noise.empty()) {
    Output dump(dump_noise);
    write_realization_csv(dump.stream(),
                          sample_realization(g, mu, cfg.grid.horizon, trajectory_seed(cfg.seed, 0)));
    dump.close();
  }
  return 0;
}

int cmd_sweep(const CommonFlags& f, const std::vector<int>& ns, const std::vector<double>& mus,
              const std::vector<double>& nus) {
  if (ns.size() < 2 && mus.size() < 2 && nus.size() < 2)
    throw ConfigError("sweep needs at least one axis with more than one value");
  const GraphSpec spec = GraphSpec::parse(f.graph);
  const RunSettings s = f.settings();
  Output out(f.out);
  std::ostream& os = out.stream();
  os << "# qwsearch sweep graph=" << spec.label() << " seed=" << s.seed
     << " horizon_factor=" << s.horizon_factor << " samples=" << s.samples << " backend=" << f.backend;
  if (s.gamma) os << " gamma=" << *s.gamma;
  if (s.trajectories) os << " trajectories=" << *s.trajectories;
  if (s.step) os << " step=" << *s.step;
  os << '\n';
  write_sweep_header(os);
  run_sweep(spec, ns, mus, nus, s, [&](const SweepRow& row) {
    write_sweep_row(os, row);
    os.flush();
  });
  out.close();
  return 0;
}

int cmd_theory(const std::vector<int>& ns, const std::string& path) {
  Output out(path);
  std::ostream& os = out.stream();
  os << "# qwsearch theory star graph, external target, gamma=1\n";
  theory::write_theory_header(os);
  for (int n : ns) theory::write_theory_row(os, theory::theory_row(n));
  out.close();
  return 0;
}

int cmd_rtn_check(double mu, double horizon, std::size_t m, std::uint64_t seed,
                  const std::vector<double>& taus, double probe) {
  if (m < 1000) throw ConfigError("rtn-check needs at least 1000 trajectories");
  check_noise_parameters(mu, horizon);
  std::vector<LinkTrajectory> sample;
  sample.reserve(m);
  for (std::size_t i = 0; i < m; ++i) sample.push_back(sample_link(mu, horizon, substream_key(seed, i)));

  const PoissonTest chi = poisson_switch_count_test(sample, mu);
  std::cout << std::setprecision(6);
  std::cout << "# qwsearch rtn-check mu=" << mu << " horizon=" << horizon << " trajectories=" << m
            << " seed=" << seed << " probe=" << probe << '\n';
  std::cout << "switch counts: mean=" << chi.mean_count << " expected=" << chi.expected_mean
            << " chi2=" << chi.chi_square << " dof=" << chi.dof << " p_value=" << chi.p_value
            << (chi.p_value > 1e-3 ? " PASS" : " FAIL") << '\n';
  std::cout << "tau,autocorr,expected,stderr,residual_sigma\n";
  bool ok = chi.p_value > 1e-3;
  for (double tau : taus) {
    const double rho = autocorrelation_estimate(sample, tau, probe);
    const double expected = std::exp(-2.0 * mu * tau);
    const double se = autocorrelation_std_error(expected, m);
    const double sigma = se > 0.0 ? (rho - expected) / se : (rho == expected ? 0.0 : INFINITY);
    ok = ok && std::abs(sigma) <= 3.0;
    std::cout << tau << ',' << rho << ',' << expected << ',' << se << ',' << sigma << '\n';
  }
  std::cout << (ok ? "overall PASS" : "overall FAIL") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-walk spatial search under random telegraph noise"};
  app.require_subcommand(1);

  CommonFlags trace_flags;
  int trace_n = 10;
  double trace_mu = 0.01, trace_nu = 1.0;
  std::string dump_noise;
  auto* trace = app.add_subcommand("trace", "ensemble p_w(t) for one (N, mu, nu) point");
  add_common(trace, trace_flags);
  trace->add_option("--n", trace_n, "graph order")->check(CLI::Range(2, 1 << 20));
  trace->add_option("--mu", trace_mu, "switching rate")->check(CLI::NonNegativeNumber);
  trace->add_option("--nu", trace_nu, "noise strength")->check(CLI::Range(0.0, 1.0));
  trace->add_option("--dump-noise", dump_noise, "write trajectory 0's noise as CSV");

  CommonFlags sweep_flags;
  std::vector<int> sweep_n{10};
  std::vector<double> sweep_mu{0.01, 10.0}, sweep_nu{0.2, 0.5, 0.9, 1.0};
  auto* sweep = app.add_subcommand("sweep", "search metrics over an (N, mu, nu) grid");
  add_common(sweep, sweep_flags);
  sweep->add_option("--n", sweep_n, "graph orders")->delimiter(',')->check(CLI::Range(2, 1 << 20));
  sweep->add_option("--mu", sweep_mu, "switching rates")->delimiter(',')->check(CLI::NonNegativeNumber);
  sweep->add_option("--nu", sweep_nu, "noise strengths")->delimiter(',')->check(CLI::Range(0.0, 1.0));

  std::vector<int> theory_n{10, 100, 1000, 10000};
  std::string theory_out = "-";
  auto* theory_cmd = app.add_subcommand("theory", "reduced star-graph spectrum, external target");
  theory_cmd->add_option("--n", theory_n, "graph orders")->delimiter(',')->check(CLI::Range(3, 1 << 24));
  theory_cmd->add_option("--out", theory_out, "output path, - for stdout");

  double rtn_mu = 1.0, rtn_horizon = 5.0, rtn_probe = 1.0;
  std::size_t rtn_m = 100000;
  std::uint64_t rtn_seed = 1;
  std::vector<double> rtn_tau{0.1, 0.5, 1.0};
  auto* rtn = app.add_subcommand("rtn-check", "statistics of sampled telegraph noise");
  rtn->add_option("--mu", rtn_mu, "switching rate")->check(CLI::NonNegativeNumber);
  rtn->add_option("--horizon", rtn_horizon, "trajectory length")->check(CLI::PositiveNumber);
  rtn->add_option("--trajectories", rtn_m, "sample size (>= 1000)");
  rtn->add_option("--seed", rtn_seed, "master seed");
  rtn->add_option("--tau", rtn_tau, "lags")->delimiter(',')->check(CLI::NonNegativeNumber);
  rtn->add_option("--probe", rtn_probe, "probe time t0")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::config);
  }

  try {
    if (*trace) return cmd_trace(trace_flags, trace_n, trace_mu, trace_nu, dump_noise);
    if (*sweep) return cmd_sweep(sweep_flags, sweep_n, sweep_mu, sweep_nu);
    if (*theory_cmd) return cmd_theory(theory_n, theory_out);
    if (*rtn) return cmd_rtn_check(rtn_mu, rtn_horizon, rtn_m, rtn_seed, rtn_tau, rtn_probe);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::numerical);
  }
  return 0;
}
