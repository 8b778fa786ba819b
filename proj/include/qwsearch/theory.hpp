#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qwsearch/error.hpp"
#include "qwsearch/graph.hpp"
#include "qwsearch/hamiltonian.hpp"
#include "qwsearch/propagator.hpp"

// Search on the star graph with an external target, gamma = 1, reduced to
// the three-dimensional invariant subspace span{|c>, |w>, |s'>} where
// |s'> is the normalized sum over the N - 2 remaining leaves. Node layout
// follows star_graph(n, StarTarget::external): c = 0, w = 1.

namespace qws::theory {

inline constexpr int kCentre = 0;
inline constexpr int kTarget = 1;

struct ReducedStarSystem {
  int n = 0;
  Eigen::Matrix3d h_red;
  Eigen::MatrixXd basis;  // n x 3, columns |c>, |w>, |s'>
};

inline void require_order(int n, int minimum) {
  if (n < minimum)
    throw ConfigError("order " + std::to_string(n) + " below the minimum " + std::to_string(minimum));
}

inline Eigen::Matrix3d reduced_hamiltonian(int n) {
  require_order(n, 3);
  const double r = std::sqrt(double(n - 2));
  Eigen::Matrix3d h;
  h << n - 1.0, -1.0, -r,
       -1.0, 0.0, 0.0,
       -r, 0.0, 1.0;
  return h;
}

inline ReducedStarSystem reduce_star(int n) {
  require_order(n, 3);
  ReducedStarSystem s{n, reduced_hamiltonian(n), Eigen::MatrixXd::Zero(n, 3)};
  s.basis(kCentre, 0) = 1.0;
  s.basis(kTarget, 1) = 1.0;
  const double amp = 1.0 / std::sqrt(double(n - 2));
  for (int j = 2; j < n; ++j) s.basis(j, 2) = amp;
  return s;
}

/// |s> expressed in the reduced basis.
inline Eigen::Vector3d reduced_uniform_state(int n) {
  const double inv = 1.0 / std::sqrt(double(n));
  return {inv, inv, std::sqrt(double(n - 2)) * inv};
}

/// H |v> for the full star Hamiltonian (gamma = 1, external target) in O(n).
inline Eigen::VectorXd apply_star_hamiltonian(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  Eigen::VectorXd out(n);
  out(kCentre) = double(n - 1) * v(kCentre) - (v.sum() - v(kCentre));
  for (Eigen::Index j = 1; j < n; ++j) out(j) = v(j) - v(kCentre);
  out(kTarget) -= v(kTarget);
  return out;
}

/// Largest deviation of B^T H B from h_red and of H B from span(B).
inline double krylov_invariance_residual(const ReducedStarSystem& s) {
  Eigen::MatrixXd hb(s.n, 3);
  for (int c = 0; c < 3; ++c) hb.col(c) = apply_star_hamiltonian(s.basis.col(c));
  const Eigen::Matrix3d projected = s.basis.transpose() * hb;
  const double leak = (hb - s.basis * projected).cwiseAbs().maxCoeff();
  return std::max(leak, (projected - s.h_red).cwiseAbs().maxCoeff());
}

/// Extracted-factor split h_red / N = H0 + H1.
inline Eigen::Matrix3d h0_matrix(int n) {
  const double a = std::sqrt(double(n - 2)) / n;
  Eigen::Matrix3d h;
  h << 1.0, 0.0, -a,
       0.0, 0.0, 0.0,
       -a, 0.0, 0.0;
  return h;
}

inline Eigen::Matrix3d h1_matrix(int n) {
  const double e = 1.0 / n;
  Eigen::Matrix3d h;
  h << -e, -e, 0.0,
       -e, 0.0, 0.0,
       0.0, 0.0, e;
  return h;
}

struct H0Spectrum {
  Eigen::Vector3d energies;  // E0 = 0, E1 < 0 < E2
  Eigen::Matrix3d vectors;   // columns |e0> = |w>, |e1>, |e2>
};

/// Eigenpairs of H0 in closed form. The |c> coefficient of |e1>, |e2> is
/// -E N / sqrt(N - 2), which tends to -sqrt(N) E for large N.
inline H0Spectrum h0_spectrum(int n) {
  require_order(n, 3);
  const double nn = n;
  const double root = std::sqrt(1.0 + 4.0 / nn - 8.0 / (nn * nn));
  H0Spectrum s;
  s.energies << 0.0, (1.0 - root) / 2.0, (1.0 + root) / 2.0;
  s.vectors.setZero();
  s.vectors(1, 0) = 1.0;
  for (int i = 1; i <= 2; ++i) {
    Eigen::Vector3d v(-s.energies(i) * nn / std::sqrt(nn - 2.0), 0.0, 1.0);
    s.vectors.col(i) = v.normalized();
  }
  return s;
}

/// Leading-order form -sqrt(N) E |c> + |s'>, normalized, of an H0 eigenvector.
inline Eigen::Vector3d asymptotic_h0_vector(int n, double energy) {
  return Eigen::Vector3d(-std::sqrt(double(n)) * energy, 0.0, 1.0).normalized();
}

struct PerturbativeSpectrum {
  double e0 = 0.0;  // -1/sqrt(N)
  double e1 = 0.0;  // +1/sqrt(N)
  Eigen::Vector3d lambda0;  // (|w> + |e1>)/sqrt(2)
  Eigen::Vector3d lambda1;  // (|w> - |e1>)/sqrt(2)
  H0Spectrum e_basis;
  Eigen::Vector3d exact_energies;  // ascending eigenvalues of h_red
  Eigen::Matrix3d exact_vectors;   // columns, signs aligned with lambda0, lambda1
};

namespace detail {
inline PerturbativeSpectrum pairs_unchecked(int n) {
  PerturbativeSpectrum p;
  p.e_basis = h0_spectrum(n);
  p.e0 = -1.0 / std::sqrt(double(n));
  p.e1 = 1.0 / std::sqrt(double(n));
  const Eigen::Vector3d w = p.e_basis.vectors.col(0);
  const Eigen::Vector3d e1 = p.e_basis.vectors.col(1);
  p.lambda0 = (w + e1) / std::sqrt(2.0);
  p.lambda1 = (w - e1) / std::sqrt(2.0);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(reduced_hamiltonian(n));
  if (es.info() != Eigen::Success) throw NumericalError("3x3 eigensolver failed");
  p.exact_energies = es.eigenvalues();
  p.exact_vectors = es.eigenvectors();
  if (p.exact_vectors.col(0).dot(p.lambda0) < 0) p.exact_vectors.col(0) *= -1.0;
  if (p.exact_vectors.col(1).dot(p.lambda1) < 0) p.exact_vectors.col(1) *= -1.0;
  if (p.exact_vectors.col(2)(0) < 0) p.exact_vectors.col(2) *= -1.0;
  return p;
}
}  // namespace detail

/// Degenerate perturbation theory for the pair {|w>, |e1>}, alongside the
/// exact eigenpairs of h_red. Only meaningful for N >= 10.
inline PerturbativeSpectrum perturbed_pairs(int n) {
  require_order(n, 10);
  return detail::pairs_unchecked(n);
}

/// Two-level prediction of p_w(t) from the exact lowest eigenpairs of h_red;
/// the high-energy third component is dropped.
inline ProbabilityTrace asymptotic_trace(int n, const TimeGrid& grid) {
  require_order(n, 10);
  const PerturbativeSpectrum p = detail::pairs_unchecked(n);
  const Eigen::Vector3d s = reduced_uniform_state(n);
  ProbabilityTrace trace(grid);
  double a[2], e[2];
  for (int i = 0; i < 2; ++i) {
    a[i] = p.exact_vectors(1, i) * p.exact_vectors.col(i).dot(s);
    e[i] = p.exact_energies(i);
  }
  for (std::size_t k = 0; k < grid.samples; ++k) {
    const double t = grid.time(k);
    trace.p[k] = std::norm(std::polar(a[0], -e[0] * t) + std::polar(1.0, -e[1] * t) * a[1]);
  }
  return trace;
}

/// 1 - max_t of the two-level prediction: 1 - (|a0| + |a1|)^2.
inline double predicted_failure(int n) {
  const PerturbativeSpectrum p = detail::pairs_unchecked(n);
  const Eigen::Vector3d s = reduced_uniform_state(n);
  double amp = 0.0;
  for (int i = 0; i < 2; ++i) amp += std::abs(p.exact_vectors(1, i) * p.exact_vectors.col(i).dot(s));
  return 1.0 - amp * amp;
}

/// Norm of the part of e^{-iHt}|s> outside the reduced subspace, from
/// dense full-space evolution.
inline double krylov_leakage(int n, double t) {
  const ReducedStarSystem r = reduce_star(n);
  const Graph g = star_graph(n, StarTarget::external);
  const Eigen::MatrixXd h = noiseless_hamiltonian(g, search_parameters(g, 0.0, 1.0));
  const WalkerState psi = evolve_state(h, uniform_state(n), t);
  const Eigen::MatrixXcd b = r.basis.cast<std::complex<double>>();
  return (psi.amplitudes - b * (b.adjoint() * psi.amplitudes)).norm();
}

/// Largest distance from an eigenvalue of h_red to the full-space spectrum.
inline double spectrum_mismatch(int n) {
  const Graph g = star_graph(n, StarTarget::external);
  const Eigen::MatrixXd h = noiseless_hamiltonian(g, search_parameters(g, 0.0, 1.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(h, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> red(reduced_hamiltonian(n), Eigen::EigenvaluesOnly);
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    worst = std::max(worst, (full.eigenvalues().array() - red.eigenvalues()(i)).abs().minCoeff());
  return worst;
}

struct TheoryRow {
  int n = 0;
  double e0_exact = 0.0;
  double e1_exact = 0.0;
  double gap = 0.0;
  double overlap_lambda0 = 0.0;
  double one_minus_psucc_pred = 0.0;
  bool hred_check = false;
};

/// Orders up to this size also compare against a dense full-space spectrum.
inline constexpr int kDenseCheckLimit = 2000;

inline TheoryRow theory_row(int n) {
  require_order(n, 3);
  const ReducedStarSystem r = reduce_star(n);
  const PerturbativeSpectrum p = detail::pairs_unchecked(n);
  TheoryRow row;
  row.n = n;
  row.e0_exact = p.exact_energies(0);
  row.e1_exact = p.exact_energies(1);
  row.gap = row.e1_exact - row.e0_exact;
  row.overlap_lambda0 = std::abs(p.exact_vectors.col(0).dot(p.lambda0));
  row.one_minus_psucc_pred = predicted_failure(n);
  const double tol = 1e-10 * std::max(1.0, double(n));
  row.hred_check = krylov_invariance_residual(r) <= tol &&
                   (n > kDenseCheckLimit || spectrum_mismatch(n) <= tol);
  return row;
}

inline void write_theory_header(std::ostream& out) {
  out << "N,E0_exact,E1_exact,gap,overlap_lambda0,one_minus_psucc_pred,hred_check\n";
}

inline void write_theory_row(std::ostream& out, const TheoryRow& r) {
  const auto precision = out.precision(12);
  out << r.n << ',' << r.e0_exact << ',' << r.e1_exact << ',' << r.gap << ',' << r.overlap_lambda0
      << ',' << r.one_minus_psucc_pred << ',' << (r.hred_check ? "pass" : "fail") << '\n';
  out.precision(precision);
}

}  // namespace qws::theory
