#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qwsearch/error.hpp"
#include "qwsearch/graph.hpp"
#include "qwsearch/rtn.hpp"

namespace qws {

/// Coupling, noise strength and marked node of a search run.
struct SearchParameters {
  double gamma = 1.0;
  double nu = 0.0;
  int target = 0;

  void validate() const {
    if (!std::isfinite(gamma) || gamma < 0.0)
      throw ConfigError("gamma must be finite and >= 0, got " + std::to_string(gamma));
    if (!(nu >= 0.0 && nu <= 1.0))
      throw ConfigError("noise strength nu must lie in [0, 1], got " + std::to_string(nu));
  }
};

/// Noiseless optimum: 1/N on the complete graph and for a central star
/// target, 1 for an external star target.
inline double default_gamma(const Graph& g) {
  switch (g.kind()) {
    case GraphKind::complete:
    case GraphKind::star_central:
      return 1.0 / g.order();
    case GraphKind::star_external:
      return 1.0;
    case GraphKind::generic:
      break;
  }
  throw ConfigError("no default gamma for a generic graph; pass one explicitly");
}

inline SearchParameters search_parameters(const Graph& g, double nu,
                                          std::optional<double> gamma = std::nullopt) {
  SearchParameters p{gamma ? *gamma : default_gamma(g), nu, g.target()};
  p.validate();
  return p;
}

/// H = gamma L - |w><w|.
inline Eigen::MatrixXd noiseless_hamiltonian(const Graph& g, const SearchParameters& p) {
  p.validate();
  Eigen::MatrixXd h = p.gamma * laplacian(g);
  h(p.target, p.target) -= 1.0;
  return h;
}

/// Laplacian with every link weight 1 + nu g_jk(t). Columns still sum to zero.
inline Eigen::MatrixXd noisy_laplacian(const Graph& g, const NoiseRealization& r, double nu,
                                       double t) {
  if (r.trajectories.size() != g.link_count())
    throw ConfigError("realization has " + std::to_string(r.trajectories.size()) +
                      " links, graph has " + std::to_string(g.link_count()));
  const int n = g.order();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < g.link_count(); ++k) {
    auto [i, j] = g.edges()[k];
    const double weight = 1.0 + nu * r.trajectories[k].value_at(t);
    l(i, j) = l(j, i) = -weight;
    l(i, i) += weight;
    l(j, j) += weight;
  }
  return l;
}

/// Source of consecutive constant-Hamiltonian segments [begin, end).
template <class S>
concept SegmentSource = requires(S& s, const S& cs) {
  { cs.begin_time() } -> std::convertible_to<double>;
  { cs.end_time() } -> std::convertible_to<double>;
  { cs.horizon() } -> std::convertible_to<double>;
  { cs.matrix() } -> std::convertible_to<const Eigen::MatrixXd&>;
  { s.advance() } -> std::same_as<bool>;
};

/// Lazily walks the noisy Hamiltonian of one realization segment by
/// segment. Each switch rewrites four matrix entries; nothing else is stored.
///
/// With `skip_inert` set and nu == 0 the switches cannot change H, so the
/// whole horizon is reported as one segment.
class NoiseSegmentCursor {
 public:
  NoiseSegmentCursor(const Graph& g, const SearchParameters& p, const NoiseRealization& r,
                     bool skip_inert = false)
      : graph_(&g), params_(p), horizon_(r.horizon), events_(switch_events(r)) {
    p.validate();
    if (skip_inert && p.nu == 0.0) events_.clear();
    if (r.trajectories.size() != g.link_count())
      throw ConfigError("realization does not match graph link count");
    signs_.reserve(r.trajectories.size());
    for (const auto& tr : r.trajectories) signs_.push_back(tr.initial_sign);
    sign_sum_.assign(static_cast<std::size_t>(g.order()), 0);
    for (std::size_t k = 0; k < signs_.size(); ++k) {
      auto [i, j] = g.edges()[k];
      sign_sum_[i] += signs_[k];
      sign_sum_[j] += signs_[k];
    }
    h_ = Eigen::MatrixXd::Zero(g.order(), g.order());
    for (std::size_t k = 0; k < signs_.size(); ++k) write_link(k);
    for (int i = 0; i < g.order(); ++i) write_diagonal(i);
    begin_ = 0.0;
    consume_cluster(begin_);
    find_end();
  }

  double begin_time() const noexcept { return begin_; }
  double end_time() const noexcept { return end_; }
  double horizon() const noexcept { return horizon_; }
  const Eigen::MatrixXd& matrix() const noexcept { return h_; }

  bool advance() {
    if (end_ >= horizon_) return false;
    begin_ = end_;
    consume_cluster(begin_);
    find_end();
    return true;
  }

 private:
  void write_link(std::size_t k) {
    auto [i, j] = graph_->edges()[k];
    h_(i, j) = h_(j, i) = -params_.gamma * (1.0 + params_.nu * signs_[k]);
  }

  void write_diagonal(int i) {
    h_(i, i) = params_.gamma * (graph_->degree(i) + params_.nu * sign_sum_[i]);
    if (i == params_.target) h_(i, i) -= 1.0;
  }

  // Applies every switch within tolerance of the breakpoint at `t`.
  void consume_cluster(double t) {
    while (next_ < events_.size() && events_[next_].first - t <= kBreakpointTolerance) {
      const std::size_t k = events_[next_].second;
      auto [i, j] = graph_->edges()[k];
      signs_[k] = -signs_[k];
      sign_sum_[i] += 2 * signs_[k];
      sign_sum_[j] += 2 * signs_[k];
      write_link(k);
      write_diagonal(i);
      write_diagonal(j);
      ++next_;
    }
  }

  void find_end() {
    end_ = horizon_;
    if (next_ < events_.size() && horizon_ - events_[next_].first > kBreakpointTolerance)
      end_ = events_[next_].first;
  }

  const Graph* graph_;
  SearchParameters params_;
  double horizon_;
  std::vector<std::pair<double, std::size_t>> events_;
  std::size_t next_ = 0;
  std::vector<int> signs_;
  std::vector<int> sign_sum_;
  Eigen::MatrixXd h_;
  double begin_ = 0.0;
  double end_ = 0.0;
};

/// Piecewise-constant H(t): segment_matrices[i] holds on [breakpoints[i], breakpoints[i+1]).
struct HamiltonianSchedule {
  std::vector<double> breakpoints;
  std::vector<Eigen::MatrixXd> segment_matrices;

  std::size_t segment_count() const noexcept { return segment_matrices.size(); }
  double horizon() const { return breakpoints.back(); }

  /// Single segment holding `h` on [0, horizon).
  static HamiltonianSchedule constant(Eigen::MatrixXd h, double horizon) {
    return {{0.0, horizon}, {std::move(h)}};
  }
};

inline HamiltonianSchedule build_schedule(const Graph& g, const SearchParameters& p,
                                          const NoiseRealization& r) {
  HamiltonianSchedule s;
  NoiseSegmentCursor cursor(g, p, r);
  do {
    s.breakpoints.push_back(cursor.begin_time());
    s.segment_matrices.push_back(cursor.matrix());
  } while (cursor.advance());
  s.breakpoints.push_back(cursor.horizon());
  return s;
}

/// SegmentSource view over an eagerly built schedule.
class ScheduleCursor {
 public:
  explicit ScheduleCursor(const HamiltonianSchedule& s) : schedule_(&s) {
    if (s.segment_matrices.empty() || s.breakpoints.size() != s.segment_matrices.size() + 1)
      throw ConfigError("malformed Hamiltonian schedule");
  }

  double begin_time() const { return schedule_->breakpoints[index_]; }
  double end_time() const { return schedule_->breakpoints[index_ + 1]; }
  double horizon() const { return schedule_->horizon(); }
  const Eigen::MatrixXd& matrix() const { return schedule_->segment_matrices[index_]; }

  bool advance() {
    if (index_ + 1 >= schedule_->segment_matrices.size()) return false;
    ++index_;
    return true;
  }

 private:
  const HamiltonianSchedule* schedule_;
  std::size_t index_ = 0;
};

static_assert(SegmentSource<NoiseSegmentCursor>);
static_assert(SegmentSource<ScheduleCursor>);

}  // namespace qws
