#include "spectrace/heat_oracle.hpp"

#include <lapacke.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "spectrace/spectral.hpp"

namespace spectrace {

namespace {

constexpr std::size_t kDenseLimit = 4608;  // largest N^dim we densify

std::vector<double> free_multipliers(const GridSpec& g) {
  std::vector<double> m(g.size());
  for (std::size_t f = 0; f < m.size(); ++f) {
    const auto idx = g.unflatten(f);
    double s = 0;
    for (int d = 0; d < g.dim; ++d) {
      const double xi = g.freq(idx[d]);
      s += xi * xi;
    }
    m[f] = s;
  }
  return m;
}

/// Real-space row of the 1D spectral Laplacian circulant:
/// c_m = (1/N) sum_k xi_k^2 e^{2 pi i k m / N}.
std::vector<double> laplacian_row(const GridSpec& g) {
  GridSpec g1 = g;
  g1.dim = 1;
  std::vector<std::complex<double>> mult(g.points_per_axis);
  for (int k = 0; k < g.points_per_axis; ++k) {
    const double xi = g.freq(k);
    mult[k] = xi * xi;
  }
  auto row = raw_dft(g1, mult, false);
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i].real();
  return out;
}

std::vector<double> dsyevd_eigenvalues(std::vector<double>& a, int n) {
  std::vector<double> w(n);
  const int info =
      LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'N', 'L', n, a.data(), n, w.data());
  if (info != 0) throw NumericsError("eigensolver failure (dsyevd info != 0)");
  return w;
}

std::vector<double> dense_eigenvalues_generic(const Potential& v) {
  const GridSpec& g = v.grid;
  const std::size_t n = g.size();
  if (n > kDenseLimit)
    throw std::invalid_argument("dense realization limited to N^dim <= 4608");
  const std::vector<double> row = laplacian_row(g);
  const int N = g.points_per_axis;
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = g.unflatten(i);
    for (int d = 0; d < g.dim; ++d) {
      // entries coupling i to j differing only along axis d
      auto jj = ii;
      for (int m = 0; m < N; ++m) {
        jj[d] = m;
        const std::size_t j = g.flatten(jj);
        a[i * n + j] += row[((ii[d] - m) % N + N) % N];
      }
    }
    a[i * n + i] += v.values[i];
  }
  return dsyevd_eigenvalues(a, static_cast<int>(n));
}

/// 1D even/odd parity split for grid-symmetric V: two half-size dense solves.
std::vector<double> dense_eigenvalues_parity(const Potential& v) {
  const GridSpec& g = v.grid;
  const int N = g.points_per_axis;
  const int half = N / 2;
  const std::vector<double> row = laplacian_row(g);
  auto c = [&](int m) { return row[((m % N) + N) % N]; };

  // Even sector: e_0, (e_i + e_{N-i})/sqrt2 for 0 < i < N/2, e_{N/2}.
  const int ne = half + 1;
  std::vector<double> E(static_cast<std::size_t>(ne) * ne, 0.0);
  auto eset = [&](int a, int b, double val) { E[static_cast<std::size_t>(a) * ne + b] = val; };
  eset(0, 0, c(0) + v.values[0]);
  eset(half, half, c(0) + v.values[half]);
  // both endpoints are unpaired basis vectors, so no sqrt2 here
  eset(0, half, c(half));
  eset(half, 0, c(half));
  for (int i = 1; i < half; ++i) {
    eset(0, i, std::sqrt(2.0) * c(i));
    eset(i, 0, std::sqrt(2.0) * c(i));
    eset(half, i, std::sqrt(2.0) * c(half - i));
    eset(i, half, std::sqrt(2.0) * c(half - i));
    for (int j = 1; j < half; ++j)
      eset(i, j, c(i - j) + c(i + j) + (i == j ? v.values[i] : 0.0));
  }

  // Odd sector: (e_i - e_{N-i})/sqrt2 for 0 < i < N/2.
  const int no = half - 1;
  std::vector<double> O(static_cast<std::size_t>(no) * no, 0.0);
  for (int i = 1; i < half; ++i)
    for (int j = 1; j < half; ++j)
      O[static_cast<std::size_t>(i - 1) * no + (j - 1)] =
          c(i - j) - c(i + j) + (i == j ? v.values[i] : 0.0);

  std::vector<double> evs = dsyevd_eigenvalues(E, ne);
  std::vector<double> odd = dsyevd_eigenvalues(O, no);
  evs.insert(evs.end(), odd.begin(), odd.end());
  std::sort(evs.begin(), evs.end());
  return evs;
}

}  // namespace

std::vector<double> operator_eigenvalues(const Potential& v) {
  if (v.grid.dim == 1 && v.grid_symmetric()) return dense_eigenvalues_parity(v);
  return dense_eigenvalues_generic(v);
}

std::vector<double> apply_operator(const Potential& v, const std::vector<double>& x) {
  const GridSpec& g = v.grid;
  std::vector<std::complex<double>> buf(x.begin(), x.end());
  auto xhat = raw_dft(g, buf, true);
  const auto mult = free_multipliers(g);
  for (std::size_t f = 0; f < xhat.size(); ++f) xhat[f] *= mult[f];
  auto back = raw_dft(g, xhat, false);
  std::vector<double> y(x.size());
  for (std::size_t f = 0; f < y.size(); ++f) y[f] = back[f].real() + v.values[f] * x[f];
  return y;
}

HeatOracle::HeatOracle(const Potential& v) : grid_(v.grid), support_radius_(v.support_radius) {
  fine_ = operator_eigenvalues(v);
  free_fine_ = free_multipliers(grid_);
  std::sort(free_fine_.begin(), free_fine_.end());

  GridSpec cg = grid_;
  cg.points_per_axis = grid_.points_per_axis / 2;
  if (cg.points_per_axis >= 16 && cg.points_per_axis % 2 == 0) {
    Potential vc;
    if (v.regrid) {
      vc = v.regrid(cg);
    } else {
      // decimate every other sample per axis
      vc.grid = cg;
      vc.support_radius = v.support_radius;
      vc.values.resize(cg.size());
      for (std::size_t f = 0; f < vc.values.size(); ++f) {
        auto idx = cg.unflatten(f);
        for (int d = 0; d < cg.dim; ++d) idx[d] *= 2;
        vc.values[f] = v.values[grid_.flatten(idx)];
      }
      vc.linf_norm = v.linf_norm;
    }
    coarse_ = operator_eigenvalues(vc);
    free_coarse_ = free_multipliers(cg);
    std::sort(free_coarse_.begin(), free_coarse_.end());
  }
}

double HeatOracle::t_max() const {
  const double spread = (grid_.half_width - support_radius_) / 6.0;
  return 0.5 * spread * spread;
}

double HeatOracle::trace_of(const std::vector<double>& evs, const std::vector<double>& free_evs,
                            double t) const {
  // Both spectra are sorted ascending; summing small terms first keeps the
  // cancellation between the two sums at round-off level.
  double a = 0.0, b = 0.0;
  for (std::size_t i = evs.size(); i-- > 0;) a += std::exp(-t * evs[i]);
  for (std::size_t i = free_evs.size(); i-- > 0;) b += std::exp(-t * free_evs[i]);
  return a - b;
}

double HeatOracle::trace(double t) const {
  if (!(t > 0)) throw std::invalid_argument("HeatOracle::trace: need t > 0");
  if (t > t_max())
    throw NumericsError("heat spread violates the boundary-contamination guard");
  return trace_of(fine_, free_fine_, t);
}

double HeatOracle::error_estimate(double t) const {
  if (coarse_.empty()) return std::abs(trace_of(fine_, free_fine_, t)) * 1e-3;
  return std::abs(trace_of(fine_, free_fine_, t) - trace_of(coarse_, free_coarse_, t));
}

BoundStateSet HeatOracle::bound_states() const {
  BoundStateSet out;
  // Resolution band: eigenvalues this close to zero may be grid artifacts.
  const double band = 4.0 * kPi * kPi / (grid_.half_width * grid_.half_width *
                                         grid_.points_per_axis);
  for (std::size_t i = 0; i < fine_.size() && fine_[i] < 0.0; ++i) {
    out.eigenvalues.push_back(fine_[i]);
    double err = 0.0;
    if (i < coarse_.size()) err = std::abs(fine_[i] - coarse_[i]);
    out.error_estimates.push_back(err);
    out.resolution_limited.push_back(fine_[i] > -band);
  }
  return out;
}

HeatTraceDirect heat_trace_direct(const Potential& v, double t) {
  HeatOracle oracle(v);
  return {oracle.trace(t), oracle.error_estimate(t)};
}

BoundStateSet bound_states(const Potential& v) {
  if (v.grid.size() <= kDenseLimit || v.grid.dim == 1) {
    HeatOracle oracle(v);
    return oracle.bound_states();
  }
  return bound_states_iterative(v);
}

namespace {

/// Solve (-Delta + shift) w = r exactly by FFT; the natural preconditioner
/// for the blocked eigensolver below.
std::vector<double> laplace_shift_solve(const GridSpec& g, const std::vector<double>& r,
                                        double shift) {
  std::vector<std::complex<double>> buf(r.begin(), r.end());
  auto rhat = raw_dft(g, buf, true);
  const auto mult = free_multipliers(g);
  for (std::size_t f = 0; f < rhat.size(); ++f) rhat[f] /= (mult[f] + shift);
  auto back = raw_dft(g, rhat, false);
  std::vector<double> w(r.size());
  for (std::size_t f = 0; f < w.size(); ++f) w[f] = back[f].real();
  return w;
}

}  // namespace

BoundStateSet bound_states_iterative(const Potential& v) {
  // LOBPCG-style block iteration with the exact (-Delta + shift)^{-1}
  // preconditioner; the block width keeps degenerate levels visible.
  using Eigen::MatrixXd;
  const std::size_t n = v.grid.size();
  const int m = 10;
  const double shift = std::max(1.0, v.linf_norm);

  auto apply_block = [&](const MatrixXd& x) {
    MatrixXd y(x.rows(), x.cols());
    std::vector<double> col(n);
    for (int j = 0; j < x.cols(); ++j) {
      for (std::size_t i = 0; i < n; ++i) col[i] = x(i, j);
      const auto hc = apply_operator(v, col);
      for (std::size_t i = 0; i < n; ++i) y(i, j) = hc[i];
    }
    return y;
  };

  MatrixXd X(n, m);
  for (int j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i)
      X(i, j) = std::sin(0.37 * (j + 1) * static_cast<double>(i + 1) + 0.11 * j) + 0.2;
  X = Eigen::HouseholderQR<MatrixXd>(X).householderQ() * MatrixXd::Identity(n, m);

  MatrixXd P(n, 0);
  Eigen::VectorXd ritz(m);
  double worst_residual = 1e300;
  for (int it = 0; it < 60; ++it) {
    MatrixXd HX = apply_block(X);
    // residuals of the current Ritz pairs
    {
      Eigen::MatrixXd a = X.transpose() * HX;
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (a + a.transpose()));
      X = X * es.eigenvectors();
      HX = HX * es.eigenvectors();
      ritz = es.eigenvalues();
    }
    MatrixXd R = HX - X * ritz.asDiagonal();
    worst_residual = 0;
    for (int j = 0; j < m; ++j)
      if (ritz(j) < 0) worst_residual = std::max(worst_residual, R.col(j).norm());
    if (worst_residual < 1e-8 && it > 4) break;

    MatrixXd W(n, m);
    std::vector<double> col(n);
    for (int j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) col[i] = R(i, j);
      const auto wc = laplace_shift_solve(v.grid, col, shift);
      for (std::size_t i = 0; i < n; ++i) W(i, j) = wc[i];
    }
    MatrixXd Z(n, m + W.cols() + P.cols());
    Z << X, W, P;
    // rank-revealing orthonormalization of the trial space
    Eigen::ColPivHouseholderQR<MatrixXd> qr(Z);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, rank);
    MatrixXd HQ = apply_block(Q);
    MatrixXd A = Q.transpose() * HQ;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (A + A.transpose()));
    const MatrixXd U = es.eigenvectors().leftCols(std::min(m, rank));
    MatrixXd Xnew = Q * U;
    P = Xnew - X * (X.transpose() * Xnew);
    X = Xnew;
  }

  BoundStateSet out;
  for (int i = 0; i < m && ritz(i) < 0.0; ++i) {
    out.eigenvalues.push_back(ritz(i));
    out.error_estimates.push_back(worst_residual);
    out.resolution_limited.push_back(ritz(i) > -1e-6);
  }
  return out;
}

}  // namespace spectrace
