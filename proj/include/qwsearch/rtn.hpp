#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "qwsearch/error.hpp"
#include "qwsearch/graph.hpp"
#include "qwsearch/random.hpp"

namespace qws {

/// Breakpoints closer than this are treated as simultaneous.
inline constexpr double kBreakpointTolerance = 1e-12;

/// One random-telegraph trajectory g(t) in {+1, -1} on [0, horizon).
struct LinkTrajectory {
  int initial_sign = 1;
  std::vector<double> switch_times;  // strictly increasing, in (0, horizon)
  double horizon = 0.0;

  /// Number of switches at or before t (right-continuous convention).
  std::size_t switches_until(double t) const {
    return static_cast<std::size_t>(
        std::upper_bound(switch_times.begin(), switch_times.end(), t) - switch_times.begin());
  }

  int value_at(double t) const {
    if (!(t >= 0.0 && t < horizon))
      throw RangeError("time " + std::to_string(t) + " outside [0, " + std::to_string(horizon) + ")");
    return (switches_until(t) % 2 == 0) ? initial_sign : -initial_sign;
  }
};

inline int value_at(const LinkTrajectory& trajectory, double t) { return trajectory.value_at(t); }

/// Independent telegraph noise on every link of a graph.
struct NoiseRealization {
  std::vector<Edge> link_order;
  std::vector<LinkTrajectory> trajectories;
  double rate = 0.0;
  double horizon = 0.0;
  std::uint64_t seed = 0;

  std::size_t link_count() const noexcept { return trajectories.size(); }
};

inline void check_noise_parameters(double rate, double horizon) {
  if (!std::isfinite(rate) || rate < 0.0)
    throw ConfigError("switching rate must be finite and >= 0, got " + std::to_string(rate));
  if (!std::isfinite(horizon) || horizon <= 0.0)
    throw ConfigError("horizon must be finite and > 0, got " + std::to_string(horizon));
}

/// Stationary telegraph process: equiprobable initial sign, then a Poisson
/// sequence of switches with exponential waiting times of mean 1/rate.
inline LinkTrajectory sample_link(double rate, double horizon, std::uint64_t key) {
  check_noise_parameters(rate, horizon);
  CounterRng rng(key);
  LinkTrajectory tr;
  tr.horizon = horizon;
  tr.initial_sign = rng.sign();
  if (rate > 0.0) {
    double t = 0.0;
    for (;;) {
      t += rng.exponential(rate);
      if (t >= horizon) break;
      if (t > 0.0) tr.switch_times.push_back(t);
    }
  }
  return tr;
}

/// Link j is drawn from substream (seed, j).
inline NoiseRealization sample_realization(const Graph& g, double rate, double horizon,
                                           std::uint64_t seed) {
  check_noise_parameters(rate, horizon);
  NoiseRealization r;
  r.link_order = g.edges();
  r.rate = rate;
  r.horizon = horizon;
  r.seed = seed;
  r.trajectories.reserve(g.link_count());
  for (std::size_t l = 0; l < g.link_count(); ++l)
    r.trajectories.push_back(sample_link(rate, horizon, substream_key(seed, l)));
  return r;
}

/// All switches of a realization as (time, link) sorted by time then link.
inline std::vector<std::pair<double, std::size_t>> switch_events(const NoiseRealization& r) {
  std::vector<std::pair<double, std::size_t>> events;
  std::size_t total = 0;
  for (const auto& tr : r.trajectories) total += tr.switch_times.size();
  events.reserve(total);
  for (std::size_t l = 0; l < r.trajectories.size(); ++l)
    for (double t : r.trajectories[l].switch_times) events.emplace_back(t, l);
  std::sort(events.begin(), events.end());
  return events;
}

/// Sorted union of all switch times with 0 and the horizon as endpoints.
/// A time within kBreakpointTolerance of the last kept breakpoint merges into it.
inline std::vector<double> merged_breakpoints(const NoiseRealization& r) {
  std::vector<double> times;
  for (const auto& tr : r.trajectories)
    times.insert(times.end(), tr.switch_times.begin(), tr.switch_times.end());
  std::sort(times.begin(), times.end());
  std::vector<double> out{0.0};
  for (double t : times)
    if (t - out.back() > kBreakpointTolerance) out.push_back(t);
  if (r.horizon - out.back() > kBreakpointTolerance)
    out.push_back(r.horizon);
  else
    out.back() = r.horizon;
  return out;
}

/// (1/M) sum_m g_m(t0 + lag) g_m(t0). Expectation exp(-2 rate lag).
inline double autocorrelation_estimate(std::span<const LinkTrajectory> sample, double lag,
                                       double probe_time) {
  if (sample.size() < 100)
    throw ConfigError("autocorrelation needs at least 100 trajectories, got " +
                      std::to_string(sample.size()));
  double sum = 0.0;
  for (const auto& tr : sample) {
    if (!(probe_time >= 0.0 && lag >= 0.0 && probe_time + lag < tr.horizon))
      throw RangeError("probe window [" + std::to_string(probe_time) + ", " +
                       std::to_string(probe_time + lag) + "] exceeds horizon " +
                       std::to_string(tr.horizon));
    sum += tr.value_at(probe_time + lag) * tr.value_at(probe_time);
  }
  return sum / static_cast<double>(sample.size());
}

/// Standard error of a mean of M products of +-1 values with mean rho.
inline double autocorrelation_std_error(double rho, std::size_t m) {
  return std::sqrt(std::max(0.0, 1.0 - rho * rho) / static_cast<double>(m));
}

struct PoissonTest {
  double chi_square = 0.0;
  int dof = 0;
  double p_value = 1.0;
  double mean_count = 0.0;
  double expected_mean = 0.0;
};

/// Chi-square goodness of fit of per-trajectory switch counts against
/// Poisson(rate * horizon). Bins are merged until each expects >= 5 counts.
inline PoissonTest poisson_switch_count_test(std::span<const LinkTrajectory> sample, double rate) {
  if (sample.empty()) throw ConfigError("empty trajectory sample");
  const double horizon = sample.front().horizon;
  const double lambda = rate * horizon;
  const double m = static_cast<double>(sample.size());

  PoissonTest out;
  out.expected_mean = lambda;
  double total = 0.0;
  for (const auto& tr : sample) total += static_cast<double>(tr.switch_times.size());
  out.mean_count = total / m;
  if (lambda == 0.0) {
    out.p_value = total == 0.0 ? 1.0 : 0.0;
    return out;
  }

  boost::math::poisson_distribution<double> law(lambda);
  // upper[b] is the largest count in bin b; the last bin is open-ended.
  std::vector<std::size_t> upper;
  std::vector<double> expected;
  double bin = 0.0;
  double cdf = 0.0;
  for (std::size_t k = 0;; ++k) {
    const double pk = boost::math::pdf(law, static_cast<double>(k));
    bin += pk;
    cdf += pk;
    const double tail = std::max(0.0, 1.0 - cdf);
    if (tail * m < 5.0) {
      if (bin * m >= 5.0 || expected.empty()) {
        expected.push_back((bin + tail) * m);
      } else {
        expected.back() += (bin + tail) * m;
        upper.pop_back();
      }
      break;
    }
    if (bin * m >= 5.0) {
      upper.push_back(k);
      expected.push_back(bin * m);
      bin = 0.0;
    }
  }
  const std::size_t bins = expected.size();
  std::vector<double> observed(bins, 0.0);
  for (const auto& tr : sample) {
    const std::size_t count = tr.switch_times.size();
    const std::size_t b = static_cast<std::size_t>(
        std::lower_bound(upper.begin(), upper.end(), count) - upper.begin());
    observed[std::min(b, bins - 1)] += 1.0;
  }
  for (std::size_t b = 0; b < bins; ++b) {
    const double d = observed[b] - expected[b];
    out.chi_square += d * d / expected[b];
  }
  out.dof = static_cast<int>(bins) - 1;
  if (out.dof > 0) {
    boost::math::chi_squared_distribution<double> chi(out.dof);
    out.p_value = boost::math::cdf(boost::math::complement(chi, out.chi_square));
  }
  return out;
}

/// Debug dump: `link,initial_sign,switch_time`, one row per switch; links
/// without switches get one row with an empty time.
inline void write_realization_csv(std::ostream& out, const NoiseRealization& r) {
  out << "link,initial_sign,switch_time\n";
  const auto precision = out.precision(17);
  for (std::size_t l = 0; l < r.trajectories.size(); ++l) {
    const auto& tr = r.trajectories[l];
    if (tr.switch_times.empty()) out << l << ',' << tr.initial_sign << ",\n";
    for (double t : tr.switch_times) out << l << ',' << tr.initial_sign << ',' << t << '\n';
  }
  out.precision(precision);
}

}  // namespace qws
