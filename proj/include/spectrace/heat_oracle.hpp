#pragma once

#include <memory>
#include <vector>

#include "spectrace/potential.hpp"

namespace spectrace {

struct BoundStateSet {
  std::vector<double> eigenvalues;        // strictly negative, ascending
  std::vector<double> error_estimates;    // per-eigenvalue Richardson estimate
  std::vector<bool> resolution_limited;   // |e| within the near-zero resolution band
  int count() const { return static_cast<int>(eigenvalues.size()); }
};

/// Ground-truth heat traces: P_V = -Delta + V discretized spectrally on the
/// periodic box, diagonalized densely (eigenvalues only; LAPACK dsyevd).
/// The free trace uses the exact Fourier multipliers of the same grid.
/// The spectrum is computed once per grid (at N and at N/2 for Richardson
/// error estimates) and reused for every t.
class HeatOracle {
 public:
  explicit HeatOracle(const Potential& v);

  /// tr(e^{-t P_V} - e^{-t P_0}) on the fine grid. Throws NumericsError when
  /// the heat spread violates the boundary-contamination guard
  /// sqrt(2t)*6 + R < L (hard precondition, not a warning).
  double trace(double t) const;

  /// Richardson-style discretization estimate |trace_N(t) - trace_{N/2}(t)|.
  double error_estimate(double t) const;

  double t_max() const;

  const std::vector<double>& spectrum() const { return fine_; }

  BoundStateSet bound_states() const;

 private:
  double trace_of(const std::vector<double>& evs, const std::vector<double>& free_evs,
                  double t) const;

  GridSpec grid_;
  double support_radius_ = 0.0;
  std::vector<double> fine_;         // eigenvalues of P_V at N
  std::vector<double> coarse_;       // eigenvalues of P_V at N/2 (empty if unavailable)
  std::vector<double> free_fine_;    // |xi|^2 multipliers at N
  std::vector<double> free_coarse_;
};

struct HeatTraceDirect {
  double value = 0.0;
  double error_estimate = 0.0;
};

HeatTraceDirect heat_trace_direct(const Potential& v, double t);

BoundStateSet bound_states(const Potential& v);

/// Iterative extremal path (block Krylov Rayleigh-Ritz on the matrix-free
/// operator): used by bound_states for grids too large to densify, exposed
/// for cross-checks. Resolves degeneracies up to the block size (4).
BoundStateSet bound_states_iterative(const Potential& v);

/// Dense symmetric eigenvalues of -Delta + V on the grid of `v`
/// (exposed for tests; prefers the even-parity split in 1D when V is
/// grid-symmetric, which halves the dense solve).
std::vector<double> operator_eigenvalues(const Potential& v);

/// Matrix-free application of -Delta + V (FFT Laplacian plus diagonal),
/// used by the iterative bound-state path for grids too large to densify.
std::vector<double> apply_operator(const Potential& v, const std::vector<double>& x);

}  // namespace spectrace
