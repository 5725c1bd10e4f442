#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "spectrace/duhamel.hpp"
#include "spectrace/potential.hpp"

namespace spectrace {

/// Coefficients a_j of the tr W_2 small-t expansion: exact rational value
/// (-1)^j j! / (2 (2j+1)!), from int_0^1 ((1-v)v)^j dv = (j!)^2/(2j+1)!.
double a_coeff(int j);

/// Heat-invariant table: per-source values c_{k,k+j} and assembled orders
/// c_j = sum_k c_{k,j} in the unsigned (paper-side) convention; the signed
/// trace expansion applies (-1)^k per source.
struct HeatCoefficients {
  int dim = 1;
  std::vector<double> a;  // a_0 .. a_m

  struct Source {
    int k = 0;
    int power = 0;     // total t-power (k + j)
    double value = 0;  // unsigned c_{k,power}
    double gnm_ratio = 0;  // |value| / (||V||_inf^{k-2} ||V||_{H^j}^2), j = power - k
  };
  std::vector<Source> sources;

  double c(int power) const;         // unsigned sum over sources
  double c_signed(int power) const;  // with (-1)^k per source
};

/// Computes c_{k,k+j}: the k = 2 family via a_j || |D|^j V ||^2 for j <= m,
/// and k in {3..kmax} (kmax <= 4) for j <= min(m, 2) via the simplex-averaged
/// expansion of the chain form (monomials turned into real-space derivative
/// products). Throws NumericsError when spectral derivatives up to order m
/// are not alias-clean.
HeatCoefficients heat_coefficients(const Potential& v, int m, int kmax = 4);

/// Scalar second/fourth moments of the chain quadratic form over the simplex:
/// qbar[(p,q)] = int_Sigma q_pq(r) dr and qq[(p,q),(l,m)] = int_Sigma q_pq q_lm dr,
/// indices p,q in [0, k-2] addressing (u_2..u_k). Monte Carlo over the simplex
/// with numerical inversion of the telescoped form; deterministic for a fixed
/// seed.
struct SimplexQMoments {
  int k = 0;
  std::vector<double> qbar;  // (k-1)^2
  std::vector<double> qq;    // (k-1)^4
};
SimplexQMoments simplex_q_moments(int k, long nodes = 100000, std::uint64_t seed = 20240501);

/// Taylor remainder r_m(s) defined by
///   e^{-s} = sum_{j<m} (-s)^j/j! + r_m(s) (-1)^m s^m / m!,
/// computed by series for small s and directly otherwise.
/// Satisfies 0 <= r_m <= 1, r_m(0) = 1, r_m'(0) = -1/(m+1).
double exp_remainder(int m, double s);

struct ExpansionFit {
  std::vector<double> powers;
  std::vector<double> coeffs;
  std::vector<double> coeff_stderr;
  std::vector<double> ts;
  std::vector<double> residuals;  // y - fit
  std::vector<double> r_curve;    // residual / t^{p_max}
  double divergence_exponent = 0; // log-log slope of |r| over the two smallest decades
  double condition = 0;           // of the column-scaled design
};

/// Least squares of (4 pi t)^{n/2} * value against monomials t^p on the grid
/// p in {p_min, p_min + p_step, ..., p_max}. Requires >= 3 samples per power
/// and a t-range of at least two decades; refuses designs with condition
/// beyond 1e10.
ExpansionFit fit_expansion(const std::vector<HeatTracePoint>& samples, int dim, double p_max,
                           double p_step = 0.5, double p_min = 1.0);

struct TraceCurveOptions {
  long w4_samples = 120000;
  std::uint64_t seed = 9021;
  bool include_w3 = true;
  bool include_w4 = true;
};

/// Deterministic-leaning evaluation of the trace difference on a t-grid, in
/// raw trace units: exact W_1, spectral W_2, deterministic W_3 (1D), and
/// shared-draw Monte Carlo W_4. Terms k >= 5 are omitted; their contribution
/// is O(t^5) with a bounded coefficient. Each point carries a noise estimate.
std::vector<HeatTracePoint> trace_curve(const Potential& v, const std::vector<double>& ts,
                                        const TraceCurveOptions& opts = {});

struct RegularityVerdict {
  int m = 0;
  bool bounded = false;
  bool inconclusive = false;
  double slope = 0;  // log-log slope of r_{m+2}
};

struct RegularityReport {
  std::vector<RegularityVerdict> verdicts;
  int largest_passing = -1;          // largest m with a bounded remainder
  double divergence_exponent = 0;    // slope at the first failing order
  bool any_inconclusive = false;
  std::vector<HeatTracePoint> curve;
};

struct ClassifyOptions {
  double t_min = 1e-4;
  double t_max = 0.1;
  int t_points = 25;
  TraceCurveOptions curve;
  double slope_tol = 0.1;  // bounded declared when slope >= -slope_tol
};

/// Tests boundedness of r_{m+2}(t) = ((4 pi t)^{n/2} trace - fitted
/// sum_{j<=m+1} c_j t^j) / t^{m+2} for each m <= m_max.
RegularityReport classify_regularity(const Potential& v, int m_max,
                                     const ClassifyOptions& opts = {});

struct GnmReport {
  double lhs = 0;    // || prod d^{alpha_j} u_j ||_{L1}
  double rhs = 0;    // (sum ||u_j||_inf)^{k-2} (sum ||D^m u_j||_2)^2
  double ratio = 0;
};

/// Product-of-derivatives inequality check; requires sum |alpha_j| = 2m and
/// |alpha_j| <= m with all fields on one grid.
GnmReport gnm_check(const std::vector<Potential>& fields,
                    const std::vector<std::array<int, 3>>& alphas, int m);

struct HolderReport {
  double form = 0;
  double std_error = 0;
  double bound = 0;  // prod ||v_j||_{p_j}
  bool holds = false;
  bool converged = true;
};

/// Smoothed multilinear form with kernel G_{r,t} at fixed r, estimated by
/// Monte Carlo, against the Hoelder bound prod ||v_j||_{p_j}
/// (2 <= p_j <= inf, sum 1/p_j = 1).
HolderReport holder_form_check(const std::vector<Potential>& fields,
                               const std::vector<double>& p, const SimplexPoint& r, double t,
                               long samples, rng::Stream stream);

/// int_0^1 int (1 - e^{-t(1-v)v|xi|^2})/t |Vhat|^2 dxi dv (2pi)^-n; grows
/// without bound as t -> 0 exactly when the H^1 seminorm diverges.
double w2_saturation_integral(const Potential& v, double t);

}  // namespace spectrace
