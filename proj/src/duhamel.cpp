#include "spectrace/duhamel.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "spectrace/quadrature.hpp"
#include "spectrace/spectral.hpp"

namespace spectrace {

namespace {

double heat_prefactor(int n, double t) { return std::pow(4.0 * kPi * t, -0.5 * n); }

struct SupportQuad {
  std::vector<std::array<double, 3>> x;
  std::vector<double> w;  // V(x) * h^n
};

SupportQuad build_support(const Potential& v) {
  SupportQuad s;
  const double hn = pow_int(v.grid.spacing(), v.grid.dim);
  for (std::size_t f = 0; f < v.values.size(); ++f) {
    if (v.values[f] == 0.0) continue;
    s.x.push_back(v.grid.point(f));
    s.w.push_back(v.values[f] * hn);
  }
  return s;
}

int batch_count(long samples) {
  return static_cast<int>(std::clamp<long>(samples / 1000, 8, 64));
}

/// Shared Monte Carlo engine: per sample draws (r, unit chain) once and
/// evaluates the u_1 grid quadrature at every requested t.
/// Returns per-(t, batch) means, laid out means[ti][batch].
std::vector<std::vector<double>> mc_batches(const Potential& v, const std::vector<double>& ts,
                                            int k, long samples, rng::Stream& stream) {
  const SupportQuad supp = build_support(v);
  const int nt = static_cast<int>(ts.size());
  const int nb = batch_count(samples);
  const long per_batch = (samples + nb - 1) / nb;
  const int dim = v.grid.dim;

  std::vector<std::vector<double>> means(nt, std::vector<double>(nb, 0.0));
  if (supp.x.empty()) return means;

  std::vector<double> scale(nt);
  for (int ti = 0; ti < nt; ++ti) scale[ti] = std::sqrt(2.0 * ts[ti]);

  auto run_batch = [&](int b) {
    rng::Stream sub = stream.split(static_cast<std::uint64_t>(b));
    std::vector<double> acc(nt, 0.0);
    std::vector<double> u(static_cast<std::size_t>(k - 1) * dim);
    std::array<double, 3> y{0, 0, 0};
    for (long sidx = 0; sidx < per_batch; ++sidx) {
      const SimplexPoint r = sample_simplex(k, sub);
      const GaussianChain chain = telescope_quadform(r, 1.0, dim);
      const std::vector<double> unit = sample_chain_unit(chain, sub);
      for (int ti = 0; ti < nt; ++ti) {
        for (std::size_t c = 0; c < unit.size(); ++c) u[c] = scale[ti] * unit[c];
        double sum = 0.0;
        for (std::size_t q = 0; q < supp.x.size(); ++q) {
          double prod = supp.w[q];
          for (int j = 0; j < k - 1 && prod != 0.0; ++j) {
            for (int d = 0; d < dim; ++d)
              y[d] = supp.x[q][d] + u[static_cast<std::size_t>(j) * dim + d];
            prod *= v.evaluate(y);
          }
          sum += prod;
        }
        acc[ti] += sum;
      }
    }
    for (int ti = 0; ti < nt; ++ti) means[ti][b] = acc[ti] / static_cast<double>(per_batch);
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int nworkers = static_cast<int>(std::min<unsigned>(hw, nb));
  std::vector<std::thread> pool;
  pool.reserve(nworkers);
  for (int wkr = 0; wkr < nworkers; ++wkr)
    pool.emplace_back([&, wkr] {
      for (int b = wkr; b < nb; b += nworkers) run_batch(b);
    });
  for (auto& th : pool) th.join();
  return means;
}

double factorial(int k) {
  double f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

double trace_w1(const Potential& v, double t) {
  if (!(t > 0)) throw std::invalid_argument("trace_w1: need t > 0");
  return heat_prefactor(v.grid.dim, t) * t * v.integral();
}

W2Result trace_w2(const Potential& v, double t) {
  if (!(t > 0)) throw std::invalid_argument("trace_w2: need t > 0");
  const SpectralRep rep = fourier(v);
  const std::size_t n = rep.coeffs.size();
  std::vector<double> a2(n), f2(n);
  for (std::size_t f = 0; f < n; ++f) {
    a2[f] = std::norm(rep.coeffs[f]);
    f2[f] = rep.freq_sq(f);
  }
  const double norm = rep.dual_cell() / pow_int(2.0 * kPi, v.grid.dim);

  auto v_integral = [&](int nodes) {
    const QuadNodes q = gauss_legendre(nodes, 0.0, 1.0);
    double acc = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const double s = t * q.x[i] * (1.0 - q.x[i]);
      double inner = 0.0;
      for (std::size_t f = 0; f < n; ++f)
        if (a2[f] != 0.0) inner += std::exp(-s * f2[f]) * a2[f];
      acc += q.w[i] * inner;
    }
    return acc * norm;
  };

  const double i64 = v_integral(64);
  const double i32 = v_integral(32);

  W2Result out;
  // Aliasing diagnostic on the t -> 0 integrand |Vhat|^2.
  sobolev_norm_sq(rep, 0.0, &out.alias);
  out.value = 0.5 * t * t * heat_prefactor(v.grid.dim, t) * i64;
  out.rel_quad_error = (i64 != 0.0) ? std::abs(i64 - i32) / std::abs(i64) : 0.0;
  return out;
}

BtEstimate bt_mc(const Potential& v, double t, int k, long samples, rng::Stream stream) {
  std::vector<BtEstimate> one = bt_mc_curve(v, {t}, k, samples, stream);
  return one.front();
}

std::vector<BtEstimate> bt_mc_curve(const Potential& v, const std::vector<double>& ts, int k,
                                    long samples, rng::Stream stream) {
  if (k < 3) throw std::invalid_argument("bt_mc: need k >= 3 (W_1, W_2 are deterministic)");
  if (samples < 1000) throw std::invalid_argument("bt_mc: need samples >= 1000");
  for (double t : ts)
    if (!(t > 0)) throw std::invalid_argument("bt_mc: need t > 0");

  auto means = mc_batches(v, ts, k, samples, stream);
  const double kfac = factorial(k);
  std::vector<BtEstimate> out(ts.size());
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    const MeanStderr ms = batch_statistics(means[ti]);
    BtEstimate& e = out[ti];
    e.k = k;
    e.t = ts[ti];
    e.value = ms.mean / kfac;
    e.std_error = ms.stderr_ / kfac;
    e.samples_used = samples;
    e.converged = (e.value == 0.0 && e.std_error == 0.0) || e.std_error <= std::abs(e.value);
  }
  return out;
}

WkTrace trace_wk_mc(const Potential& v, double t, int k, long samples, rng::Stream stream) {
  WkTrace w;
  w.bt = bt_mc(v, t, k, samples, stream);
  const double pref = heat_prefactor(v.grid.dim, t) * pow_int(t, k);
  w.trace = pref * w.bt.value;
  w.trace_se = pref * w.bt.std_error;
  return w;
}

namespace {

/// Triple correlation C_{m2,m3} = h sum_i V_i V_{i+m2} V_{i+m3} (periodic)
/// via Chat_{k2,k3} = h F_{k2} F_{k3} conj(F_{k2+k3}) with F the raw DFT of V.
std::vector<double> triple_correlation_1d(const Potential& v) {
  const GridSpec& g = v.grid;
  const int N = g.points_per_axis;
  std::vector<std::complex<double>> f(v.values.begin(), v.values.end());
  auto F = raw_dft(g, f, true);
  GridSpec g2 = g;
  g2.dim = 2;
  std::vector<std::complex<double>> chat(static_cast<std::size_t>(N) * N);
  for (int k2 = 0; k2 < N; ++k2)
    for (int k3 = 0; k3 < N; ++k3)
      chat[static_cast<std::size_t>(k2) * N + k3] =
          F[k2] * F[k3] * std::conj(F[(k2 + k3) % N]);
  auto c = raw_dft(g2, chat, false);
  std::vector<double> out(c.size());
  const double h = g.spacing();
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = h * c[i].real();
  return out;
}

inline void catmull_weights(double f, double w[4]) {
  // cubic Catmull-Rom weights for samples at offsets {-1, 0, 1, 2}
  const double f2 = f * f, f3 = f2 * f;
  w[0] = 0.5 * (-f3 + 2 * f2 - f);
  w[1] = 0.5 * (3 * f3 - 5 * f2 + 2);
  w[2] = 0.5 * (-3 * f3 + 4 * f2 + f);
  w[3] = 0.5 * (f3 - f2);
}

double bicubic_periodic(const std::vector<double>& c, int N, double h, double u2, double u3) {
  auto wrap = [N](int i) { return ((i % N) + N) % N; };
  const double a = u2 / h, b = u3 / h;
  const int i0 = static_cast<int>(std::floor(a)), j0 = static_cast<int>(std::floor(b));
  double wa[4], wb[4];
  catmull_weights(a - i0, wa);
  catmull_weights(b - j0, wb);
  int ia[4], jb[4];
  for (int d = 0; d < 4; ++d) {
    ia[d] = wrap(i0 - 1 + d);
    jb[d] = wrap(j0 - 1 + d);
  }
  double acc = 0;
  for (int d = 0; d < 4; ++d) {
    const double* row = c.data() + static_cast<std::size_t>(ia[d]) * N;
    acc += wa[d] * (wb[0] * row[jb[0]] + wb[1] * row[jb[1]] + wb[2] * row[jb[2]] +
                    wb[3] * row[jb[3]]);
  }
  return acc;
}

std::vector<double> bt3_run(const std::vector<double>& corr, const GridSpec& g,
                            const std::vector<double>& ts, int s_nodes, int h_nodes) {
  const int N = g.points_per_axis;
  const double h = g.spacing();
  const QuadNodes gl = gauss_legendre(s_nodes, 0.0, 1.0);
  const QuadNodes gh = gauss_hermite(h_nodes);
  const double inv_pi = 1.0 / kPi;
  std::vector<double> out(ts.size(), 0.0);
  // Simplex: r uniform with s_i = r_i - r_1; integrate over 0 < s2 < s3 < 1
  // with the r_1 volume factor (1 - s3); map s3 = z1, s2 = z1 z2.
  for (int a = 0; a < s_nodes; ++a) {
    const double z1 = gl.x[a];
    for (int b = 0; b < s_nodes; ++b) {
      const double z2 = gl.x[b];
      const double s3 = z1, s2 = z1 * z2;
      const double wr = gl.w[a] * gl.w[b] * z1 * (1.0 - s3);
      // per-axis covariance q_ij = min(s_i,s_j) - s_i s_j, Cholesky
      const double q22 = s2 * (1.0 - s2), q23 = s2 * (1.0 - s3), q33 = s3 * (1.0 - s3);
      const double l11 = std::sqrt(std::max(q22, 1e-300));
      const double l21 = q23 / l11;
      const double l22 = std::sqrt(std::max(q33 - l21 * l21, 0.0));
      for (std::size_t ti = 0; ti < ts.size(); ++ti) {
        const double sc = 2.0 * std::sqrt(ts[ti]);  // u = sqrt(2t) * L * (sqrt2 x)
        double acc = 0.0;
        for (int i = 0; i < h_nodes; ++i) {
          const double u2 = sc * l11 * gh.x[i];
          const double base3 = sc * l21 * gh.x[i];
          for (int j = 0; j < h_nodes; ++j) {
            const double u3 = base3 + sc * l22 * gh.x[j];
            acc += gh.w[i] * gh.w[j] * bicubic_periodic(corr, N, h, u2, u3);
          }
        }
        out[ti] += wr * inv_pi * acc;
      }
    }
  }
  return out;
}

}  // namespace

Bt3Curve bt3_deterministic(const Potential& v, const std::vector<double>& ts,
                           int simplex_nodes, int hermite_nodes) {
  if (v.grid.dim != 1)
    throw std::invalid_argument("bt3_deterministic: one-dimensional grids only");
  for (double t : ts)
    if (!(t > 0)) throw std::invalid_argument("bt3_deterministic: need t > 0");
  const std::vector<double> corr = triple_correlation_1d(v);
  Bt3Curve c;
  c.values = bt3_run(corr, v.grid, ts, simplex_nodes, hermite_nodes);
  const auto coarse = bt3_run(corr, v.grid, ts, simplex_nodes / 2, (2 * hermite_nodes) / 3);
  for (std::size_t i = 0; i < ts.size(); ++i)
    c.quad_error = std::max(c.quad_error, std::abs(c.values[i] - coarse[i]));
  return c;
}

double tail_bound_term(int k, double t, const Potential& v) {
  if (!(t > 0) || t > 1.0)
    throw std::invalid_argument("tail_bound: stated range is 0 < t <= 1");
  const double chat = kTailCalibration * v.linf_norm;
  const int n = v.grid.dim;
  // log-domain to avoid overflow in k! for large k
  double lg = k * std::log(std::max(chat, 1e-300)) + 0.5 * n * std::log(static_cast<double>(k)) +
              (k - 0.5 * n) * std::log(t) - std::lgamma(k + 1.0);
  return std::exp(lg);
}

double tail_bound(int kmax, double t, const Potential& v) {
  if (kmax < 1) throw std::invalid_argument("tail_bound: need kmax >= 1");
  if (!(t > 0) || t > 1.0)
    throw std::invalid_argument("tail_bound: stated range is 0 < t <= 1");
  if (v.linf_norm == 0.0) return 0.0;
  double sum = 0.0;
  for (int k = kmax + 1; k < kmax + 400; ++k) {
    const double term = tail_bound_term(k, t, v);
    sum += term;
    if (term < 1e-18 * sum || term < 1e-300) break;
  }
  return sum;
}

TraceSeries trace_total(const Potential& v, double t, int kmax, long samples,
                        rng::Stream stream, double tol) {
  if (kmax < 1 || kmax > 8)
    throw std::invalid_argument("trace_total: kmax must be in [1, 8]");
  TraceSeries s;
  s.t = t;
  s.tail_bound = tail_bound(kmax, t, v);
  if (!(s.tail_bound <= tol))
    throw NumericsError("trace_total: tail bound exceeds requested tolerance at this kmax");

  auto sign = [&](int k) { return (k % 2 == 0) ? 1.0 : -1.0; };
  double total = 0.0, var = 0.0;

  s.terms.push_back({1, sign(1) * trace_w1(v, t), 0.0});
  if (kmax >= 2) {
    const W2Result w2 = trace_w2(v, t);
    s.terms.push_back({2, sign(2) * w2.value, w2.rel_quad_error * std::abs(w2.value)});
  }
  for (int k = 3; k <= kmax; ++k) {
    const WkTrace wk = trace_wk_mc(v, t, k, samples, stream.split(1000 + k));
    s.terms.push_back({k, sign(k) * wk.trace, wk.trace_se});
  }
  for (const TraceTerm& term : s.terms) {
    total += term.value;
    var += term.std_error * term.std_error;
  }
  s.total = total;
  s.std_error = std::sqrt(var);
  return s;
}

}  // namespace spectrace
