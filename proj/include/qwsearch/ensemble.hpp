#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qwsearch/error.hpp"
#include "qwsearch/graph.hpp"
#include "qwsearch/hamiltonian.hpp"
#include "qwsearch/propagator.hpp"
#include "qwsearch/rtn.hpp"
#include "qwsearch/random.hpp"

namespace qws {

/// Noiseless optimal search time pi sqrt(N) / 2.
inline double optimal_time(int n) { return std::numbers::pi * std::sqrt(double(n)) / 2.0; }

/// Grid over [0, factor * pi sqrt(N) / 2]. The default factor 4 gives 2 pi sqrt(N).
inline TimeGrid default_grid(int n, double horizon_factor = 4.0, std::size_t samples = 1024) {
  if (!(std::isfinite(horizon_factor) && horizon_factor > 0.0))
    throw ConfigError("horizon factor must be > 0");
  return TimeGrid(horizon_factor * optimal_time(n), samples);
}

/// Trajectory budget used when none is given: 10000 for rate >= 1, 20000 below.
inline std::size_t default_trajectories(double rate) { return rate >= 1.0 ? 10000 : 20000; }

struct EnsembleConfig {
  Graph graph;
  SearchParameters params;
  double rate = 0.0;
  std::size_t trajectories = 1;
  std::uint64_t seed = 0;
  TimeGrid grid;
  Backend backend = Backend::automatic;
  std::optional<double> step;
  unsigned workers = 0;  // 0: QWSEARCH_WORKERS or hardware concurrency
  bool accumulate_density = false;

  void validate() const {
    params.validate();
    check_noise_parameters(rate, grid.horizon);
    if (trajectories < 1) throw ConfigError("trajectory count must be >= 1");
    if (params.target < 0 || params.target >= graph.order()) throw ConfigError("target outside graph");
  }
};

/// Worker count: explicit request, else QWSEARCH_WORKERS, else hardware threads.
inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("QWSEARCH_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    throw ConfigError(std::string("QWSEARCH_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// A trajectory failed; carries its seed so it can be replayed alone.
class TrajectoryError : public NumericalError {
 public:
  TrajectoryError(std::size_t index, std::uint64_t seed, const std::string& what)
      : NumericalError("trajectory " + std::to_string(index) + " (seed " + std::to_string(seed) +
                       ") failed: " + what),
        index_(index),
        seed_(seed) {}
  std::size_t index() const noexcept { return index_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::size_t index_;
  std::uint64_t seed_;
};

/// Ensemble mean of p_w(t) with standard errors of the mean.
struct EnsembleTrace {
  ProbabilityTrace trace;
  std::size_t trajectories = 0;
  std::uint64_t seed = 0;
  BackendChoice backend;
  std::vector<std::string> warnings;
  std::vector<Eigen::MatrixXcd> density;  // rho(t_k), only with accumulate_density
};

inline std::uint64_t trajectory_seed(std::uint64_t master, std::size_t index) {
  return substream_key(master, index);
}

inline BackendChoice backend_for(const EnsembleConfig& cfg) {
  return choose_backend(cfg.backend, cfg.graph.link_count(), cfg.rate, cfg.grid.horizon, cfg.step);
}

/// Samples and propagates trajectory `index`; observe(k, state_block) sees each grid sample.
template <class Observer>
void run_trajectory(const EnsembleConfig& cfg, const BackendChoice& backend, std::size_t index,
                    Observer&& observe) {
  const std::uint64_t seed = trajectory_seed(cfg.seed, index);
  try {
    const NoiseRealization r = sample_realization(cfg.graph, cfg.rate, cfg.grid.horizon, seed);
    NoiseSegmentCursor cursor(cfg.graph, cfg.params, r, /*skip_inert=*/true);
    const WalkerState psi0 = uniform_state(cfg.graph.order());
    if (backend.backend == Backend::stepped)
      drive_stepped(cursor, psi0, cfg.grid, backend.step, observe);
    else
      drive_exact(cursor, psi0, cfg.grid, observe);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw TrajectoryError(index, seed, e.what());
  }
}

/// p_w(t) of one trajectory, for replay and backend comparisons.
inline ProbabilityTrace trajectory_trace(const EnsembleConfig& cfg, std::size_t index,
                                         std::optional<BackendChoice> backend = std::nullopt) {
  cfg.validate();
  ProbabilityTrace trace(cfg.grid);
  run_trajectory(cfg, backend.value_or(backend_for(cfg)), index,
                 detail::TargetRecorder{&trace, cfg.params.target});
  return trace;
}

namespace detail {

inline constexpr std::size_t kEnsembleBlock = 64;

// Shifted sums relative to a reference trace; exact zero variance when
// every trajectory reproduces the reference.
struct BlockSums {
  std::vector<double> s1, s2;
  std::vector<Eigen::MatrixXcd> rho;

  void add(const BlockSums& o) {
    for (std::size_t k = 0; k < s1.size(); ++k) {
      s1[k] += o.s1[k];
      s2[k] += o.s2[k];
    }
    for (std::size_t k = 0; k < rho.size(); ++k) rho[k] += o.rho[k];
  }
};

// Pairwise reduction in block order; independent of scheduling.
inline BlockSums pairwise_reduce(std::vector<BlockSums>& blocks, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return std::move(blocks[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  BlockSums left = pairwise_reduce(blocks, lo, mid);
  BlockSums right = pairwise_reduce(blocks, mid, hi);
  left.add(right);
  return left;
}

}  // namespace detail

/// Monte Carlo estimate of <w|rho(t)|w> over noise realizations.
///
/// Trajectory k uses noise seed substream_key(seed, k). Trajectories are
/// grouped in fixed blocks of 64 that are summed in index order and then
/// reduced pairwise, so the result does not depend on the worker count.
inline EnsembleTrace run_ensemble(const EnsembleConfig& cfg) {
  cfg.validate();
  const BackendChoice backend = backend_for(cfg);
  const std::size_t samples = cfg.grid.samples;
  const std::size_t m = cfg.trajectories;
  const int target = cfg.params.target;
  const int n = cfg.graph.order();

  EnsembleTrace out{ProbabilityTrace(cfg.grid), m, cfg.seed, backend, {}, {}};
  if (backend.backend == Backend::stepped)
    if (auto w = stepped_resolution_warning(backend.step, cfg.rate)) out.warnings.push_back(*w);

  const std::vector<double> reference = trajectory_trace(cfg, 0, backend).p;

  const std::size_t block_count = (m + detail::kEnsembleBlock - 1) / detail::kEnsembleBlock;
  std::vector<detail::BlockSums> blocks(block_count);
  std::vector<std::exception_ptr> failures(block_count);

  auto run_block = [&](std::size_t b) {
    detail::BlockSums& sums = blocks[b];
    sums.s1.assign(samples, 0.0);
    sums.s2.assign(samples, 0.0);
    if (cfg.accumulate_density) sums.rho.assign(samples, Eigen::MatrixXcd::Zero(n, n));
    const std::size_t end = std::min(m, (b + 1) * detail::kEnsembleBlock);
    for (std::size_t i = b * detail::kEnsembleBlock; i < end; ++i) {
      run_trajectory(cfg, backend, i, [&](std::size_t k, const detail::StateBlock& x) {
        const double d = detail::probability(x, target) - reference[k];
        sums.s1[k] += d;
        sums.s2[k] += d * d;
        if (cfg.accumulate_density) {
          const Eigen::VectorXcd psi = detail::from_block(x);
          sums.rho[k] += psi * psi.adjoint();
        }
      });
    }
  };

  const unsigned workers = std::min<std::size_t>(resolve_workers(cfg.workers), block_count);
  std::atomic<std::size_t> next_block{0};
  auto worker = [&] {
    for (std::size_t b; (b = next_block.fetch_add(1)) < block_count;) {
      try {
        run_block(b);
      } catch (...) {
        failures[b] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);

  const detail::BlockSums total = detail::pairwise_reduce(blocks, 0, block_count);
  const double md = static_cast<double>(m);
  for (std::size_t k = 0; k < samples; ++k) {
    out.trace.p[k] = reference[k] + total.s1[k] / md;
    if (m > 1) {
      const double var = (total.s2[k] - total.s1[k] * total.s1[k] / md) / (md - 1.0);
      out.trace.std_error[k] = std::sqrt(std::max(0.0, var) / md);
    }
  }
  if (cfg.accumulate_density) {
    out.density.reserve(samples);
    for (const auto& r : total.rho) out.density.push_back(r / md);
  }
  return out;
}

/// Exact slow-noise limit: average of the static-disorder traces over all
/// 2^l sign patterns, each with weight 2^-l. Requires l <= 20.
inline ProbabilityTrace semi_static_oracle(const Graph& g, const SearchParameters& p, const TimeGrid& grid) {
  p.validate();
  const std::size_t links = g.link_count();
  if (links > 20)
    throw ConfigError("semi-static oracle enumerates 2^l patterns; l = " + std::to_string(links) +
                      " exceeds 20");
  const WalkerState psi0 = uniform_state(g.order());
  const Eigen::MatrixXd base = laplacian(g);
  const std::size_t patterns = std::size_t{1} << links;
  ProbabilityTrace mean(grid);
  for (std::size_t c = 0; c < patterns; ++c) {
    Eigen::MatrixXd l = base;
    for (std::size_t k = 0; k < links; ++k) {
      const double sign = (c >> k) & 1U ? -1.0 : 1.0;
      auto [i, j] = g.edges()[k];
      const double dw = p.nu * sign;
      l(i, j) -= dw;
      l(j, i) -= dw;
      l(i, i) += dw;
      l(j, j) += dw;
    }
    Eigen::MatrixXd h = p.gamma * l;
    h(p.target, p.target) -= 1.0;
    const ProbabilityTrace tr = evolve_static(h, psi0, grid, p.target);
    for (std::size_t k = 0; k < grid.samples; ++k) mean.p[k] += tr.p[k];
  }
  for (double& v : mean.p) v /= static_cast<double>(patterns);
  return mean;
}

/// One-line `key=value` echo of an ensemble configuration.
inline std::string describe(const EnsembleConfig& cfg) {
  std::ostringstream s;
  s.precision(17);
  s << "graph=" << to_string(cfg.graph.kind()) << " n=" << cfg.graph.order()
    << " links=" << cfg.graph.link_count() << " target=" << cfg.params.target
    << " gamma=" << cfg.params.gamma << " nu=" << cfg.params.nu << " mu=" << cfg.rate
    << " trajectories=" << cfg.trajectories << " seed=" << cfg.seed << " horizon=" << cfg.grid.horizon
    << " samples=" << cfg.grid.samples << " backend=" << to_string(cfg.backend);
  if (cfg.step) s << " step=" << *cfg.step;
  return s.str();
}

/// CSV `t,p_mean,p_stderr[,p_noiseless]` with `#` comment lines first.
inline void write_trace_csv(std::ostream& out, const EnsembleTrace& e, const std::string& comment,
                            const ProbabilityTrace* noiseless = nullptr) {
  std::istringstream lines(comment);
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
  out << "t,p_mean,p_stderr" << (noiseless ? ",p_noiseless" : "") << '\n';
  const auto precision = out.precision(12);
  for (std::size_t k = 0; k < e.trace.size(); ++k) {
    out << e.trace.grid.time(k) << ',' << e.trace.p[k] << ',' << e.trace.std_error[k];
    if (noiseless) out << ',' << noiseless->p[k];
    out << '\n';
  }
  out.precision(precision);
}

}  // namespace qws
