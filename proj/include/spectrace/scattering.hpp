#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "spectrace/heat_oracle.hpp"
#include "spectrace/potential.hpp"

namespace spectrace {

using cplx = std::complex<double>;

/// 2x2 matrix relating e^{+-i lambda x} coefficients across the support,
/// with its exact lambda-derivative propagated cell by cell.
/// det m = 1 (Wronskian conservation).
struct TransferMatrix {
  cplx lambda;
  Eigen::Matrix2cd m;
  Eigen::Matrix2cd dm;  // d m / d lambda
};

/// Integrates -u'' + V u = lambda^2 u across the support (1D). Cells between
/// potential breakpoints use the exact constant-coefficient propagator when
/// the profile is piecewise constant, and a 4th-order Magnus step otherwise;
/// step width is capped at min(h, 0.1/|lambda|).
TransferMatrix transfer_matrix(const Potential& v, cplx lambda);

struct SMatrix1D {
  double lambda = 0;
  cplx transmission;
  cplx reflection_left;
  cplx reflection_right;
  Eigen::Matrix2cd s;       // [[t, r_R], [r_L, t]]
  double unitarity_defect;  // max |(S* S - I)_ij|
};

SMatrix1D smatrix(const Potential& v, double lambda);

struct Resonance {
  cplx lambda;           // Im <= 0
  int multiplicity = 1;
  bool imaginary_axis = false;  // rho-type, Re lambda ~ 0
  double residual = 0;          // |f| at the polished zero
};

struct ResonanceRegion {
  double re0 = 0, re1 = 0;  // the search box is symmetrized under re -> -re
  double im0 = 0, im1 = 0;  // im1 <= 0
};

/// Zeros of the outgoing-matching entry of the transfer matrix inside the
/// region, located by rectangle subdivision with argument-principle counting
/// and polished by Newton. The returned set is closed under
/// lambda -> -conj(lambda).
std::vector<Resonance> find_resonances(const Potential& v, const ResonanceRegion& region,
                                       double tol = 1e-8);

struct PhaseData {
  std::vector<double> lambda;
  std::vector<double> sigma;        // unwrapped (1/2 pi i) log det S
  std::vector<double> sigma_prime;  // (1/2 pi i) tr(S^-1 dS/d lambda)
};

PhaseData scattering_phase(const Potential& v, const std::vector<double>& lambda_grid);

struct BirmanKreinReport {
  double t = 0;
  double lhs = 0;             // heat-oracle trace difference
  double phase_integral = 0;  // int_0^Lambda sigma'(l) e^{-t l^2} dl
  double bound_state_sum = 0; // sum_k e^{t mu_k^2}
  double rhs_m0 = 0, rhs_m1 = 0;
  int m_selected = 0;
  double residual = 0;        // |lhs - rhs(m_selected)|
  double residual_other = 0;
  double lambda_cut = 0;
  bool ok = false;
};

/// Birman-Krein identity check: lhs from the eigendecomposition oracle,
/// rhs = phase integral + bound-state sum + m/2 with m in {0,1} chosen by
/// best fit and both residuals reported.
BirmanKreinReport birman_krein_check(const Potential& v, double t, double rel_tol = 0.01);

struct PhaseDecomposition {
  std::vector<double> lambda;
  std::vector<double> sigma_prime;
  std::vector<double> model;    // Lorentzian resonance/bound-state sum + background
  double background = 0;        // fitted constant (g' has degree n-1 = 0 in 1D)
  double sup_misfit = 0;
  double integral_sigma = 0;    // int (sigma' - background) over the grid
  double integral_expected = 0; // -K'/2 + J1/2 + J2 bookkeeping, truncated to the region
  int n_bound = 0, n_axis = 0, n_pairs = 0;
};

/// Compares sigma' against the truncated resonance sum
/// -(1/pi) sum_pairs [Im l_j / |l - l_j|^2 + Im l_j / |l + l_j|^2]
/// -(1/pi) sum_axis rho_j/(l^2 + rho_j^2) - (1/pi) sum_k mu_k/(l^2 + mu_k^2)
/// plus a fitted constant background.
PhaseDecomposition resonance_phase_check(const Potential& v,
                                         const std::vector<double>& lambda_grid,
                                         const ResonanceRegion& region, double tol = 1e-8);

/// Exact evaluation of int_0^inf g'(l) e^{-t l^2} dl for an odd polynomial
/// g(l) = sum_p coeffs[p] l^p of degree <= n; even-degree coefficients must
/// vanish. Result equals t^{-n/2} sum_j a_j Gamma(n/2 - j + 1) t^j.
double weighted_phase_integral(const std::vector<double>& g_coeffs, double t, int n);

}  // namespace spectrace
