#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "qwsearch/ensemble.hpp"
#include "qwsearch/error.hpp"
#include "qwsearch/graph.hpp"
#include "qwsearch/hamiltonian.hpp"
#include "qwsearch/propagator.hpp"

namespace qws {

struct SearchMetrics {
  double p_succ = 0.0;
  double t_max = 0.0;
  double avg_running_time = 0.0;  // t_max / p_succ
  double stderr_p = 0.0;
  std::size_t peak_index = 0;     // grid index of the first maximum
};

/// Peaks closer than this to the global maximum count as ties.
inline constexpr double kPeakTieTolerance = 1e-12;

/// Success probability, first time of the maximum and average running time.
///
/// The first grid maximum is refined with the parabola through it and its
/// two neighbours; the refined value is clamped to [0, 1].
inline SearchMetrics extract_metrics(const ProbabilityTrace& trace, bool refine = true) {
  if (trace.p.empty()) throw ConfigError("empty trace");
  const std::vector<double>& p = trace.p;
  const double top = *std::max_element(p.begin(), p.end());
  if (!(top > 0.0)) throw NumericalError("degenerate trace: p_w(t) is zero everywhere");
  // Earliest local maximum within roundoff of the global one.
  std::size_t k = 0;
  while (!(p[k] >= top - kPeakTieTolerance && (k + 1 == p.size() || p[k] >= p[k + 1]))) ++k;

  SearchMetrics m;
  m.peak_index = k;
  m.p_succ = trace.p[k];
  m.t_max = trace.grid.time(k);
  m.stderr_p = trace.std_error.empty() ? 0.0 : trace.std_error[k];
  if (refine && k > 0 && k + 1 < trace.p.size()) {
    const double lo = trace.p[k - 1], mid = trace.p[k], hi = trace.p[k + 1];
    const double a = 0.5 * (lo + hi) - mid;
    const double b = 0.5 * (hi - lo);
    if (a < 0.0) {
      const double x = std::clamp(-b / (2.0 * a), -0.5, 0.5);
      m.t_max = trace.grid.time(k) + x * trace.grid.step();
      m.p_succ = mid + b * x + a * x * x;
    }
  }
  m.p_succ = std::clamp(m.p_succ, 0.0, 1.0);
  m.avg_running_time = m.t_max / m.p_succ;
  return m;
}

inline SearchMetrics extract_metrics(const EnsembleTrace& e, bool refine = true) {
  return extract_metrics(e.trace, refine);
}

/// Mean of the geometric trial count, 1 / p_succ.
inline double expected_trials(double p_succ) {
  if (!(p_succ > 0.0)) throw ConfigError("expected trials diverge for p_succ <= 0");
  if (p_succ > 1.0) throw ConfigError("p_succ must not exceed 1");
  return 1.0 / p_succ;
}

struct ScalingFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms residual in log space
  std::vector<double> orders;
};

/// Least-squares line through (log N, log T). Orders below `min_order` are
/// dropped before fitting; at least four must remain.
inline ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& points, double min_order = 8.0) {
  std::vector<std::pair<double, double>> used;
  for (const auto& pt : points) {
    if (!(pt.first > 0.0) || !(pt.second > 0.0))
      throw ConfigError("scaling fit needs positive N and T");
    if (pt.first >= min_order) used.push_back(pt);
  }
  if (used.size() < 4)
    throw ConfigError("scaling fit needs at least 4 orders >= " + std::to_string(min_order));
  for (std::size_t i = 1; i < used.size(); ++i)
    if (!(used[i].first > used[i - 1].first)) throw ConfigError("orders must be strictly increasing");

  const double n = static_cast<double>(used.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : used) {
    sx += std::log(x);
    sy += std::log(y);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : used) {
    const double dx = std::log(x) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - my);
  }
  ScalingFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double ss = 0;
  for (const auto& [x, y] : used) {
    const double r = std::log(y) - (fit.intercept + fit.exponent * std::log(x));
    ss += r * r;
    fit.orders.push_back(x);
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

/// Graph family of a run: a builder kind, or an edge-list file.
struct GraphSpec {
  GraphKind kind = GraphKind::complete;
  std::string edge_list_path;

  /// Accepts complete, star-central, star-external, or a path to an edge list.
  static GraphSpec parse(const std::string& text) {
    if (text == "complete") return {GraphKind::complete, {}};
    if (text == "star-central") return {GraphKind::star_central, {}};
    if (text == "star-external") return {GraphKind::star_external, {}};
    return {GraphKind::generic, text};
  }

  Graph build(int n) const {
    switch (kind) {
      case GraphKind::complete: return complete_graph(n);
      case GraphKind::star_central: return star_graph(n, StarTarget::central);
      case GraphKind::star_external: return star_graph(n, StarTarget::external);
      case GraphKind::generic: break;
    }
    return read_edge_list(edge_list_path);
  }

  std::string label() const { return kind == GraphKind::generic ? edge_list_path : to_string(kind); }
};

/// Settings shared by every point of a sweep.
struct RunSettings {
  std::optional<double> gamma;
  std::optional<std::size_t> trajectories;  // default_trajectories(mu) when empty
  std::uint64_t seed = 1;
  double horizon_factor = 4.0;
  std::size_t samples = 1024;
  Backend backend = Backend::automatic;
  std::optional<double> step;
  unsigned workers = 0;
};

inline EnsembleConfig make_config(const Graph& g, double rate, double nu, const RunSettings& s) {
  EnsembleConfig cfg{
      .graph = g,
      .params = search_parameters(g, nu, s.gamma),
      .rate = rate,
      .trajectories = s.trajectories.value_or(default_trajectories(rate)),
      .seed = s.seed,
      .grid = default_grid(g.order(), s.horizon_factor, s.samples),
      .backend = s.backend,
      .step = s.step,
      .workers = s.workers,
  };
  cfg.validate();
  return cfg;
}

struct SweepRow {
  int n = 0;
  double rate = 0.0;
  double nu = 0.0;
  double gamma = 0.0;
  SearchMetrics metrics;
  std::size_t trajectories = 0;
  std::uint64_t seed = 0;
};

inline SweepRow run_point(const Graph& g, double rate, double nu, const RunSettings& s) {
  const EnsembleConfig cfg = make_config(g, rate, nu, s);
  const EnsembleTrace e = run_ensemble(cfg);
  return {g.order(), rate, nu, cfg.params.gamma, extract_metrics(e), cfg.trajectories, cfg.seed};
}

/// Points in order N (outer), mu, nu (inner). Every point reuses the master
/// seed, so neighbouring points share their noise draws.
template <class OnRow>
std::vector<SweepRow> run_sweep(const GraphSpec& spec, const std::vector<int>& orders,
                                const std::vector<double>& rates, const std::vector<double>& nus,
                                const RunSettings& s, OnRow&& on_row) {
  if (orders.empty() || rates.empty() || nus.empty()) throw ConfigError("sweep lists must be nonempty");
  std::vector<SweepRow> rows;
  for (int n : orders) {
    const Graph g = spec.build(n);
    for (double rate : rates)
      for (double nu : nus) {
        rows.push_back(run_point(g, rate, nu, s));
        on_row(rows.back());
      }
  }
  return rows;
}

inline void write_sweep_header(std::ostream& out) {
  out << "N,mu,nu,gamma,p_succ,p_stderr,t_max,avg_T,M,seed\n";
}

inline void write_sweep_row(std::ostream& out, const SweepRow& r) {
  const auto precision = out.precision(12);
  out << r.n << ',' << r.rate << ',' << r.nu << ',' << r.gamma << ',' << r.metrics.p_succ << ','
      << r.metrics.stderr_p << ',' << r.metrics.t_max << ',' << r.metrics.avg_running_time << ','
      << r.trajectories << ',' << r.seed << '\n';
  out.precision(precision);
}

}  // namespace qws
