#pragma once

#include <complex>
#include <vector>

#include "spectrace/potential.hpp"

namespace spectrace {

/// Discrete Fourier coefficients with the convention
///   Vhat(xi_k) = h^n sum_x exp(-i x.xi_k) V(x),
/// stored in raw FFT index order (k in [0,N) per axis, frequency via
/// GridSpec::freq). The matching inversion carries (2pi)^-n and the dual cell
/// (pi/L)^n.
struct SpectralRep {
  GridSpec grid;
  std::vector<std::complex<double>> coeffs;

  /// Dual-grid cell volume (pi/L)^n.
  double dual_cell() const { return pow_int(kPi / grid.half_width, grid.dim); }

  /// |xi|^2 at a flat dual index.
  double freq_sq(std::size_t flat) const {
    const auto idx = grid.unflatten(flat);
    double s = 0;
    for (int d = 0; d < grid.dim; ++d) {
      const double f = grid.freq(idx[d]);
      s += f * f;
    }
    return s;
  }
};

SpectralRep fourier(const Potential& p);

/// Inverse transform back to grid samples; imaginary parts must be at
/// round-off level and are dropped.
std::vector<double> inverse_fourier(const SpectralRep& s);

/// Raw complex DFT without the h^n / phase convention; used internally for
/// convolutions where the plain circular form is wanted.
std::vector<std::complex<double>> raw_dft(const GridSpec& g,
                                          const std::vector<std::complex<double>>& in,
                                          bool forward);

struct AliasCheck {
  double fraction = 0.0;  // integrand mass carried by the top 10% of the spectrum
  bool flagged = false;   // true when fraction > 1%
};

/// Homogeneous squared Sobolev seminorm
///   || |D|^s V ||_{L2}^2 = (2pi)^-n int |xi|^{2s} |Vhat|^2 dxi,
/// so s = 0 reproduces ||V||_{L2}^2.
double sobolev_norm_sq(const Potential& p, double s, AliasCheck* alias = nullptr);
double sobolev_norm_sq(const SpectralRep& rep, double s, AliasCheck* alias = nullptr);

/// Inhomogeneous H^m squared norm with weight (1+|xi|^2)^m.
double hm_norm_sq(const Potential& p, int m);
double hm_norm_sq(const SpectralRep& rep, int m);

/// Mollification V_eps = phi_eps * V with the standard compactly supported
/// bump, sampled and normalized on the grid so that the discrete L-inf and
/// H^m contractions are exact. Requires eps >= 2h.
Potential mollify(const Potential& p, double eps);

/// Spectral partial derivative d^alpha V returned as grid samples.
/// alpha is a per-axis order array.
std::vector<double> spectral_derivative(const Potential& p, const std::array<int, 3>& alpha);
std::vector<double> spectral_derivative(const SpectralRep& rep, const std::array<int, 3>& alpha);

}  // namespace spectrace
