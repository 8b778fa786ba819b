#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qwsearch/error.hpp"
#include "qwsearch/hamiltonian.hpp"

namespace qws {

/// Walker amplitudes in the node basis.
struct WalkerState {
  Eigen::VectorXcd amplitudes;

  double norm() const { return amplitudes.norm(); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(amplitudes.size()); }
};

/// |s> = N^{-1/2} sum_j |j>.
inline WalkerState uniform_state(int n) {
  if (n < 1) throw ConfigError("uniform state needs n >= 1");
  return {Eigen::VectorXcd::Constant(n, std::complex<double>(1.0 / std::sqrt(double(n)), 0.0))};
}

inline WalkerState basis_state(int n, int node) {
  WalkerState s{Eigen::VectorXcd::Zero(n)};
  s.amplitudes(node) = 1.0;
  return s;
}

/// S equally spaced samples on [0, horizon], both ends included.
struct TimeGrid {
  double horizon = 1.0;
  std::size_t samples = 2;

  TimeGrid() = default;
  TimeGrid(double horizon_, std::size_t samples_) : horizon(horizon_), samples(samples_) {
    if (!(std::isfinite(horizon) && horizon > 0.0))
      throw ConfigError("grid horizon must be finite and > 0");
    if (samples < 2) throw ConfigError("grid needs at least 2 samples");
  }

  double step() const { return horizon / static_cast<double>(samples - 1); }
  double time(std::size_t k) const {
    return k + 1 == samples ? horizon : static_cast<double>(k) * step();
  }
};

/// Sampled target population p_w(t_k), with per-sample standard error.
struct ProbabilityTrace {
  TimeGrid grid;
  std::vector<double> p;
  std::vector<double> std_error;

  explicit ProbabilityTrace(const TimeGrid& g) : grid(g), p(g.samples, 0.0), std_error(g.samples, 0.0) {}
  std::size_t size() const noexcept { return p.size(); }
};

namespace detail {

// Complex state stored as an n x 2 real block [Re | Im] so that products
// with the real symmetric Hamiltonian are plain real GEMMs.
using StateBlock = Eigen::Matrix<double, Eigen::Dynamic, 2>;

inline StateBlock to_block(const Eigen::VectorXcd& v) {
  StateBlock x(v.size(), 2);
  x.col(0) = v.real();
  x.col(1) = v.imag();
  return x;
}

inline Eigen::VectorXcd from_block(const StateBlock& x) {
  Eigen::VectorXcd v(x.rows());
  v.real() = x.col(0);
  v.imag() = x.col(1);
  return v;
}

inline double probability(const StateBlock& x, int node) {
  return x(node, 0) * x(node, 0) + x(node, 1) * x(node, 1);
}

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> decompose(const Eigen::MatrixXd& h) {
  if (!h.allFinite()) throw NumericalError("Hamiltonian has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigendecomposition failed for " << h.rows() << "x" << h.cols()
        << " Hamiltonian (Frobenius norm " << h.norm()
        << ", asymmetry " << (h - h.transpose()).norm() << ")";
    throw NumericalError(msg.str());
  }
  return es;
}

// Largest |H t| handled by one Taylor substep.
inline constexpr double kTaylorTheta = 2.0;
inline constexpr int kTaylorMaxTerms = 60;
// Rough term count used only for cost estimates.
inline constexpr double kTaylorTermsEstimate = 24.0;

inline int taylor_substeps(double h_norm, double tau) {
  return std::max(1, static_cast<int>(std::ceil(h_norm * std::abs(tau) / kTaylorTheta)));
}

/// x <- exp(-i H tau) x by a Taylor series summed until the terms fall
/// below double precision.
inline void taylor_apply(const Eigen::MatrixXd& h, double h_norm, double tau, StateBlock& x,
                         StateBlock& term, StateBlock& work) {
  if (tau == 0.0) return;
  const int m = taylor_substeps(h_norm, tau);
  const double dt = tau / m;
  for (int s = 0; s < m; ++s) {
    term = x;
    for (int k = 1; k <= kTaylorMaxTerms; ++k) {
      work.noalias() = h * term;
      const double f = dt / k;
      // (-i f) (a + i b) = f b - i f a
      term.col(0) = f * work.col(1);
      term.col(1) = -f * work.col(0);
      x += term;
      if (term.cwiseAbs().maxCoeff() <= 1e-17 * std::max(1.0, x.cwiseAbs().maxCoeff())) break;
    }
  }
}

/// Evolves `x` through one piece [t0, t1) of constant `h`, reporting every
/// grid sample falling in the piece (all remaining ones when `closes_grid`).
template <class Observer>
void propagate_piece(const Eigen::MatrixXd& h, double t0, double t1, StateBlock& x,
                     const TimeGrid& grid, std::size_t& next, bool closes_grid, Observer& observe) {
  auto inside = [&](std::size_t k) { return closes_grid || grid.time(k) < t1; };
  std::size_t last = next;
  while (last < grid.samples && inside(last)) ++last;

  const double n = static_cast<double>(h.rows());
  const double h_norm = h.cwiseAbs().colwise().sum().maxCoeff();
  double taylor_cost = 0.0;
  double prev = t0;
  for (std::size_t k = next; k < last; ++k) {
    taylor_cost += taylor_substeps(h_norm, grid.time(k) - prev);
    prev = grid.time(k);
  }
  taylor_cost += taylor_substeps(h_norm, t1 - prev);
  taylor_cost *= kTaylorTermsEstimate * n * n;
  const double spectral_cost = 12.0 * n * n * n + 4.0 * n * n * static_cast<double>(last - next + 1);

  if (taylor_cost <= spectral_cost) {
    StateBlock term(x.rows(), 2), work(x.rows(), 2);
    double t = t0;
    for (; next < last; ++next) {
      const double tk = grid.time(next);
      taylor_apply(h, h_norm, tk - t, x, term, work);
      t = tk;
      observe(next, std::as_const(x));
    }
    taylor_apply(h, h_norm, t1 - t, x, term, work);
    return;
  }

  const auto es = decompose(h);
  const Eigen::MatrixXd& v = es.eigenvectors();
  const Eigen::VectorXd& lambda = es.eigenvalues();
  const StateBlock c = v.transpose() * x;
  StateBlock rotated(x.rows(), 2);
  auto rotate = [&](double tau) {
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
      const double cs = std::cos(lambda(j) * tau), sn = std::sin(lambda(j) * tau);
      // e^{-i l tau} (a + i b)
      rotated(j, 0) = cs * c(j, 0) + sn * c(j, 1);
      rotated(j, 1) = cs * c(j, 1) - sn * c(j, 0);
    }
  };
  StateBlock sample(x.rows(), 2);
  for (; next < last; ++next) {
    rotate(grid.time(next) - t0);
    sample.noalias() = v * rotated;
    observe(next, std::as_const(sample));
  }
  rotate(t1 - t0);
  x.noalias() = v * rotated;
}

inline void check_initial(const WalkerState& psi0, Eigen::Index n) {
  if (psi0.amplitudes.size() != n)
    throw ConfigError("initial state has dimension " + std::to_string(psi0.amplitudes.size()) +
                      ", Hamiltonian has " + std::to_string(n));
  if (std::abs(psi0.norm() - 1.0) > 1e-9) throw ConfigError("initial state is not normalized");
}

}  // namespace detail

/// Exact event-driven propagation: every constant segment is applied with
/// its own exponential, in time order. Calls observe(k, state_block) for
/// each grid sample.
template <SegmentSource Source, class Observer>
void drive_exact(Source& source, const WalkerState& psi0, const TimeGrid& grid, Observer&& observe) {
  detail::check_initial(psi0, source.matrix().rows());
  if (grid.horizon > source.horizon() * (1.0 + 1e-12))
    throw ConfigError("grid horizon exceeds the schedule horizon");
  detail::StateBlock x = detail::to_block(psi0.amplitudes);
  std::size_t next = 0;
  for (;;) {
    const bool last_piece = source.end_time() >= source.horizon();
    detail::propagate_piece(source.matrix(), source.begin_time(), source.end_time(), x, grid, next,
                            last_piece, observe);
    if (next >= grid.samples || !source.advance()) break;
  }
}

/// Fixed-step propagation: the Hamiltonian is frozen at its value at the
/// start of each step of length `step`, so switches act only on step edges.
template <SegmentSource Source, class Observer>
void drive_stepped(Source& source, const WalkerState& psi0, const TimeGrid& grid, double step,
                   Observer&& observe) {
  if (!(std::isfinite(step) && step > 0.0)) throw ConfigError("step must be finite and > 0");
  detail::check_initial(psi0, source.matrix().rows());
  const double horizon = source.horizon();
  if (grid.horizon > horizon * (1.0 + 1e-12))
    throw ConfigError("grid horizon exceeds the schedule horizon");
  detail::StateBlock x = detail::to_block(psi0.amplitudes);
  std::size_t next = 0;
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / step - 1e-9)));
  for (std::size_t j = 0; j < steps && next < grid.samples; ++j) {
    const double t0 = static_cast<double>(j) * step;
    const double t1 = j + 1 == steps ? horizon : std::min(horizon, static_cast<double>(j + 1) * step);
    while (source.end_time() <= t0 && source.advance()) {
    }
    detail::propagate_piece(source.matrix(), t0, t1, x, grid, next, j + 1 == steps, observe);
  }
}

namespace detail {
struct TargetRecorder {
  ProbabilityTrace* trace;
  int target;
  void operator()(std::size_t k, const StateBlock& x) { trace->p[k] = probability(x, target); }
};
}  // namespace detail

/// p_w(t_k) for a time-independent H from one eigendecomposition.
inline ProbabilityTrace evolve_static(const Eigen::MatrixXd& h, const WalkerState& psi0,
                                      const TimeGrid& grid, int target) {
  detail::check_initial(psi0, h.rows());
  const auto es = detail::decompose(h);
  const Eigen::VectorXcd c = es.eigenvectors().transpose().cast<std::complex<double>>() * psi0.amplitudes;
  const Eigen::VectorXd row = es.eigenvectors().row(target).transpose();
  const Eigen::VectorXd& lambda = es.eigenvalues();
  ProbabilityTrace trace(grid);
  for (std::size_t k = 0; k < grid.samples; ++k) {
    const double t = grid.time(k);
    std::complex<double> amp = 0.0;
    for (Eigen::Index j = 0; j < lambda.size(); ++j)
      amp += row(j) * std::polar(1.0, -lambda(j) * t) * c(j);
    trace.p[k] = std::norm(amp);
  }
  return trace;
}

/// Full state e^{-iHt} psi0 for a constant Hamiltonian.
inline WalkerState evolve_state(const Eigen::MatrixXd& h, const WalkerState& psi0, double t) {
  detail::check_initial(psi0, h.rows());
  const auto es = detail::decompose(h);
  const Eigen::MatrixXcd v = es.eigenvectors().cast<std::complex<double>>();
  Eigen::VectorXcd c = v.adjoint() * psi0.amplitudes;
  for (Eigen::Index j = 0; j < c.size(); ++j) c(j) *= std::polar(1.0, -es.eigenvalues()(j) * t);
  return {v * c};
}

template <SegmentSource Source>
ProbabilityTrace evolve_exact(Source source, const WalkerState& psi0, const TimeGrid& grid, int target) {
  ProbabilityTrace trace(grid);
  drive_exact(source, psi0, grid, detail::TargetRecorder{&trace, target});
  return trace;
}

template <SegmentSource Source>
ProbabilityTrace evolve_stepped(Source source, const WalkerState& psi0, const TimeGrid& grid,
                                int target, double step) {
  ProbabilityTrace trace(grid);
  drive_stepped(source, psi0, grid, step, detail::TargetRecorder{&trace, target});
  return trace;
}

inline ProbabilityTrace evolve_schedule_exact(const HamiltonianSchedule& s, const WalkerState& psi0,
                                              const TimeGrid& grid, int target) {
  return evolve_exact(ScheduleCursor(s), psi0, grid, target);
}

inline ProbabilityTrace evolve_schedule_stepped(const HamiltonianSchedule& s, const WalkerState& psi0,
                                                const TimeGrid& grid, int target, double step) {
  return evolve_stepped(ScheduleCursor(s), psi0, grid, target, step);
}

enum class Backend { exact, stepped, automatic };

inline const char* to_string(Backend b) {
  switch (b) {
    case Backend::exact: return "exact";
    case Backend::stepped: return "stepped";
    case Backend::automatic: return "auto";
  }
  return "?";
}

struct BackendChoice {
  Backend backend = Backend::exact;
  double step = 0.0;  // only meaningful for the stepped backend
};

/// Event-driven when the expected switch count links * rate * horizon is at
/// most 1e5, otherwise fixed steps of min(1/(20 rate), horizon/1e4).
inline BackendChoice choose_backend(Backend requested, std::size_t links, double rate, double horizon,
                                    std::optional<double> step = std::nullopt) {
  const double default_step = rate > 0.0 ? std::min(1.0 / (20.0 * rate), horizon / 1e4) : horizon / 1e4;
  switch (requested) {
    case Backend::exact:
      return {Backend::exact, 0.0};
    case Backend::stepped:
      return {Backend::stepped, step.value_or(default_step)};
    case Backend::automatic:
      break;
  }
  const double events = static_cast<double>(links) * rate * horizon;
  if (events <= 1e5) return {Backend::exact, 0.0};
  return {Backend::stepped, step.value_or(default_step)};
}

/// Non-empty when the step is too coarse to resolve switches of this rate.
inline std::optional<std::string> stepped_resolution_warning(double step, double rate) {
  if (rate > 0.0 && step > 1.0 / (10.0 * rate)) {
    std::ostringstream msg;
    msg << "step " << step << " exceeds 1/(10 mu) = " << 1.0 / (10.0 * rate)
        << "; noise switches are poorly resolved";
    return msg.str();
  }
  return std::nullopt;
}

}  // namespace qws
