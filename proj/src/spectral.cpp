#include "spectrace/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>

namespace spectrace {

namespace {

// FFTW planning is not thread-safe; execution of separate plans is.
std::mutex g_fftw_mutex;

void run_fftw(const GridSpec& g, std::complex<double>* data, int sign) {
  int n[3] = {g.points_per_axis, g.points_per_axis, g.points_per_axis};
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    plan = fftw_plan_dft(g.dim, n, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data), sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_destroy_plan(plan);
  }
}

int index_parity(const GridSpec& g, std::size_t flat) {
  const auto idx = g.unflatten(flat);
  int s = 0;
  for (int d = 0; d < g.dim; ++d) s += idx[d];
  return s & 1;
}

}  // namespace

std::vector<std::complex<double>> raw_dft(const GridSpec& g,
                                          const std::vector<std::complex<double>>& in,
                                          bool forward) {
  std::vector<std::complex<double>> out = in;
  run_fftw(g, out.data(), forward ? FFTW_FORWARD : FFTW_BACKWARD);
  if (!forward) {
    const double inv = 1.0 / static_cast<double>(g.size());
    for (auto& c : out) c *= inv;
  }
  return out;
}

SpectralRep fourier(const Potential& p) {
  SpectralRep rep;
  rep.grid = p.grid;
  rep.coeffs.assign(p.values.begin(), p.values.end());
  run_fftw(p.grid, rep.coeffs.data(), FFTW_FORWARD);
  // The grid starts at -L, which shows up as a (-1)^k phase per axis on top of
  // the plain DFT, together with the h^n quadrature weight.
  const double hn = pow_int(p.grid.spacing(), p.grid.dim);
  for (std::size_t f = 0; f < rep.coeffs.size(); ++f)
    rep.coeffs[f] *= index_parity(p.grid, f) ? -hn : hn;
  return rep;
}

std::vector<double> inverse_fourier(const SpectralRep& s) {
  std::vector<std::complex<double>> buf(s.coeffs.size());
  const double hn = pow_int(s.grid.spacing(), s.grid.dim);
  for (std::size_t f = 0; f < buf.size(); ++f)
    buf[f] = s.coeffs[f] * (index_parity(s.grid, f) ? -1.0 : 1.0) / hn;
  run_fftw(s.grid, buf.data(), FFTW_BACKWARD);
  const double inv = 1.0 / static_cast<double>(s.grid.size());
  std::vector<double> out(buf.size());
  for (std::size_t f = 0; f < buf.size(); ++f) out[f] = buf[f].real() * inv;
  return out;
}

namespace {

double weighted_spectral_sum(const SpectralRep& rep,
                             const std::function<double(double)>& weight_of_fsq,
                             AliasCheck* alias) {
  const GridSpec& g = rep.grid;
  const double cell = rep.dual_cell();
  const double norm = cell / pow_int(2.0 * kPi, g.dim);
  const int topcut = static_cast<int>(std::floor(0.9 * (g.points_per_axis / 2)));
  double total = 0, top = 0;
  for (std::size_t f = 0; f < rep.coeffs.size(); ++f) {
    const double a2 = std::norm(rep.coeffs[f]);
    if (a2 == 0) continue;
    const double w = weight_of_fsq(rep.freq_sq(f));
    const double term = w * a2;
    total += term;
    const auto idx = g.unflatten(f);
    bool in_top = false;
    for (int d = 0; d < g.dim; ++d)
      in_top = in_top || std::abs(g.signed_index(idx[d])) >= topcut;
    if (in_top) top += term;
  }
  if (alias) {
    alias->fraction = total > 0 ? top / total : 0.0;
    alias->flagged = alias->fraction > 0.01;
  }
  return total * norm;
}

}  // namespace

double sobolev_norm_sq(const SpectralRep& rep, double s, AliasCheck* alias) {
  if (!(s >= 0)) throw std::invalid_argument("sobolev_norm_sq: s must be >= 0");
  if (s == 0)
    return weighted_spectral_sum(rep, [](double) { return 1.0; }, alias);
  return weighted_spectral_sum(rep, [s](double f2) { return std::pow(f2, s); }, alias);
}

double sobolev_norm_sq(const Potential& p, double s, AliasCheck* alias) {
  return sobolev_norm_sq(fourier(p), s, alias);
}

double hm_norm_sq(const SpectralRep& rep, int m) {
  if (m < 0) throw std::invalid_argument("hm_norm_sq: m must be >= 0");
  return weighted_spectral_sum(rep, [m](double f2) { return pow_int(1.0 + f2, m); }, nullptr);
}

double hm_norm_sq(const Potential& p, int m) { return hm_norm_sq(fourier(p), m); }

Potential mollify(const Potential& p, double eps) {
  const GridSpec& g = p.grid;
  const double h = g.spacing();
  if (!(eps >= 2.0 * h))
    throw std::invalid_argument("mollify: eps below grid resolution (need eps >= 2h)");

  // Kernel centered at grid index 0 with periodic min-image distance;
  // normalized so h^n * sum = 1 exactly, hence |phi_hat| <= 1 on the grid.
  const int N = g.points_per_axis;
  std::vector<std::complex<double>> kernel(g.size(), 0.0);
  double sum = 0;
  for (std::size_t f = 0; f < kernel.size(); ++f) {
    const auto idx = g.unflatten(f);
    double r2 = 0;
    for (int d = 0; d < g.dim; ++d) {
      int k = idx[d];
      if (k > N / 2) k -= N;
      const double x = k * h;
      r2 += x * x;
    }
    const double u2 = r2 / (eps * eps);
    if (u2 < 1.0) {
      const double v = std::exp(-1.0 / (1.0 - u2));
      kernel[f] = v;
      sum += v;
    }
  }
  const double hn = pow_int(h, g.dim);
  for (auto& c : kernel) c /= sum * hn;

  auto khat = raw_dft(g, kernel, true);
  std::vector<std::complex<double>> vhat(g.size());
  for (std::size_t f = 0; f < vhat.size(); ++f) vhat[f] = p.values[f];
  run_fftw(g, vhat.data(), FFTW_FORWARD);
  for (std::size_t f = 0; f < vhat.size(); ++f) vhat[f] *= khat[f] * hn;
  run_fftw(g, vhat.data(), FFTW_BACKWARD);

  Potential out;
  out.grid = g;
  out.support_radius = p.support_radius + eps;
  out.values.resize(g.size());
  const double inv = 1.0 / static_cast<double>(g.size());
  for (std::size_t f = 0; f < vhat.size(); ++f) out.values[f] = vhat[f].real() * inv;
  // Convolution smears tiny round-off outside the enlarged support; clip it so
  // the support invariant holds exactly.
  for (std::size_t f = 0; f < out.values.size(); ++f) {
    const auto x = g.point(f);
    double r2 = 0;
    for (int d = 0; d < g.dim; ++d) r2 += x[d] * x[d];
    if (r2 > out.support_radius * out.support_radius) out.values[f] = 0.0;
  }
  out.linf_norm = 0;
  for (double v : out.values) out.linf_norm = std::max(out.linf_norm, std::abs(v));
  if (out.support_radius > 0.75 * g.half_width)
    throw std::invalid_argument("mollify: enlarged support exceeds guard margin");
  if (p.regrid) {
    auto base = p.regrid;
    out.regrid = [base, eps](const GridSpec& gg) { return mollify(base(gg), eps); };
  }
  return out;
}

std::vector<double> spectral_derivative(const SpectralRep& rep, const std::array<int, 3>& alpha) {
  SpectralRep d = rep;
  const GridSpec& g = rep.grid;
  for (std::size_t f = 0; f < d.coeffs.size(); ++f) {
    const auto idx = g.unflatten(f);
    std::complex<double> mul = 1.0;
    for (int ax = 0; ax < g.dim; ++ax) {
      const int ord = alpha[ax];
      if (ord == 0) continue;
      // Nyquist mode has no well-defined odd derivative; zero it out.
      if (g.signed_index(idx[ax]) == -g.points_per_axis / 2 && ord % 2 == 1) {
        mul = 0.0;
        break;
      }
      mul *= std::pow(std::complex<double>(0.0, g.freq(idx[ax])), ord);
    }
    d.coeffs[f] *= mul;
  }
  return inverse_fourier(d);
}

std::vector<double> spectral_derivative(const Potential& p, const std::array<int, 3>& alpha) {
  return spectral_derivative(fourier(p), alpha);
}

}  // namespace spectrace
