#pragma once

#include <vector>

#include "spectrace/rng.hpp"
#include "spectrace/spectral.hpp"

namespace spectrace {

/// Ordered point 0 < r_1 < ... < r_k < 1 on the time simplex.
struct SimplexPoint {
  std::vector<double> r;

  int k() const { return static_cast<int>(r.size()); }
  void validate() const;
};

/// Telescoped form of the Gaussian chain exponent. With u' = (u_2,...,u_k)
/// the chain quadratic
///   |u_k|^2/(1+r_1-r_k) + sum_j |u_{j+1}-u_j|^2/(r_{j+1}-r_j) + |u_2|^2/(r_2-r_1)
/// equals sum_{j=2}^{k} w_j |u_j - beta_j u_{j+1}|^2 with beta_k = 0 and the
/// weights below; the implied density then factorizes into a sampling chain
/// (u_k first, each u_j centered at beta_j u_{j+1}) and integrates to one.
struct GaussianChain {
  SimplexPoint r;
  double t = 0.0;
  int dim = 1;
  std::vector<double> weights;  // w_2..w_k, index j-2
  std::vector<double> shifts;   // beta_2..beta_k (beta_k = 0)
};

/// Weights/shifts of the telescoped quadratic for a simplex point.
/// Rejects nearly degenerate gaps (< 1e-12).
GaussianChain telescope_quadform(const SimplexPoint& r, double t = 1.0, int dim = 1);

/// Raw chain exponent quadratic (the un-telescoped form), u' laid out as
/// (k-1) points of `dim` coordinates.
double chain_quadratic_raw(const SimplexPoint& r, const std::vector<double>& u, int dim);

/// Telescoped quadratic evaluated from a GaussianChain.
double chain_quadratic_telescoped(const GaussianChain& c, const std::vector<double>& u);

/// Per-axis covariance matrix of the chain density at t (size (k-1)^2,
/// row-major): 2t * inverse of the telescoped quadratic form.
std::vector<double> chain_covariance(const SimplexPoint& r, double t);

/// Uniform sample on the simplex: sort of k uniforms; degenerate gaps are
/// resampled rather than regularized.
SimplexPoint sample_simplex(int k, rng::Stream& stream);

struct ChainSample {
  SimplexPoint r;
  std::vector<double> u;  // (k-1)*dim coordinates, u_2 first
};

/// Draw (r, u') with r uniform on the simplex and u' from the chain density
/// G_{r,t} by sequential Gaussian sampling down the telescoped chain.
ChainSample sample_chain(int k, double t, int dim, rng::Stream& stream);

/// Unit-scale chain draw: returns u'/sqrt(2t), which is t-independent, so one
/// draw can be reused across a whole t-grid.
std::vector<double> sample_chain_unit(const GaussianChain& chain, rng::Stream& stream);

/// Free heat propagation on the Fourier side: multiply by exp(-s |xi|^2).
SpectralRep heat_propagate(const SpectralRep& field, double s);

/// Gaussian moment  int_0^inf lambda^k exp(-t lambda^2) d lambda
///                = Gamma((k+1)/2) t^{-(k+1)/2} / 2.
double gamma_moment(int k, double t);

struct LorentzGaussResult {
  double value = 0.0;     // (1/pi) int_0^inf exp(-s r^2)/(1+r^2) dr
  double residual = 0.0;  // value - exp(s)/2; residual/sqrt(s) -> b0 as s -> 0
};

/// Heat-weighted Lorentzian integral and its deviation from the leading
/// exp(s)/2 term. Adaptive Gauss-Kronrod on [0, 40/sqrt(s)] plus an analytic
/// tail bound.
LorentzGaussResult lorentz_gauss_integral(double s);

/// Fit residual/sqrt(s) = b0 + b1 s over a grid of s values; returns b0.
double fit_sqrt_leading(const std::vector<double>& svals);

}  // namespace spectrace
