#include "spectrace/invariants.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>

#include "spectrace/quadrature.hpp"
#include "spectrace/spectral.hpp"

namespace spectrace {

double a_coeff(int j) {
  if (j < 0) throw std::invalid_argument("a_coeff: need j >= 0");
  // (-1)^j j! / (2 (2j+1)!) evaluated as a product of ratios to stay exact
  // in double for all j of interest.
  double val = 0.5;
  for (int i = 1; i <= j; ++i) val *= static_cast<double>(i);          // j!
  for (int i = 1; i <= 2 * j + 1; ++i) val /= static_cast<double>(i);  // /(2j+1)!
  return (j % 2 == 0) ? val : -val;
}

double HeatCoefficients::c(int power) const {
  double s = 0;
  for (const Source& src : sources)
    if (src.power == power) s += src.value;
  return s;
}

double HeatCoefficients::c_signed(int power) const {
  double s = 0;
  for (const Source& src : sources)
    if (src.power == power) s += (src.k % 2 == 0 ? 1.0 : -1.0) * src.value;
  return s;
}

SimplexQMoments simplex_q_moments(int k, long nodes, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("simplex_q_moments: need k >= 2");
  const int m = k - 1;
  SimplexQMoments out;
  out.k = k;
  out.qbar.assign(static_cast<std::size_t>(m) * m, 0.0);
  out.qq.assign(static_cast<std::size_t>(m) * m * m * m, 0.0);
  rng::Stream stream(seed);
  Eigen::MatrixXd M(m, m), Q(m, m);
  for (long s = 0; s < nodes; ++s) {
    const SimplexPoint r = sample_simplex(k, stream);
    const GaussianChain c = telescope_quadform(r, 1.0, 1);
    M.setZero();
    for (int j = 2; j <= k; ++j) {
      const int a = j - 2;
      const double w = c.weights[a];
      M(a, a) += w;
      if (j < k) {
        const double beta = c.shifts[a];
        M(a, a + 1) -= w * beta;
        M(a + 1, a) -= w * beta;
        M(a + 1, a + 1) += w * beta * beta;
      }
    }
    Q = M.inverse();
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) {
        out.qbar[static_cast<std::size_t>(p) * m + q] += Q(p, q);
        for (int l = 0; l < m; ++l)
          for (int mm = 0; mm < m; ++mm)
            out.qq[((static_cast<std::size_t>(p) * m + q) * m + l) * m + mm] +=
                Q(p, q) * Q(l, mm);
      }
  }
  // Uniform sampling on the ordered simplex has density k!, so the Sigma
  // integral is the sample mean divided by k!.
  double kfac = 1;
  for (int i = 2; i <= k; ++i) kfac *= i;
  const double norm = 1.0 / (kfac * static_cast<double>(nodes));
  for (auto& x : out.qbar) x *= norm;
  for (auto& x : out.qq) x *= norm;
  return out;
}

namespace {

/// Cache of spectral derivative fields keyed by per-axis order.
class DerivativeCache {
 public:
  explicit DerivativeCache(const Potential& v) : v_(v), rep_(fourier(v)) {}

  const std::vector<double>& get(const std::array<int, 3>& alpha) {
    auto it = cache_.find(alpha);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(alpha, spectral_derivative(rep_, alpha)).first->second;
  }

  const Potential& v_;

 private:
  SpectralRep rep_;
  std::map<std::array<int, 3>, std::vector<double>> cache_;
};

/// Grid integral of V(x) * prod_slots d^{alpha_s} V(x).
double product_integral(DerivativeCache& cache, const std::vector<std::array<int, 3>>& slots) {
  const Potential& v = cache.v_;
  std::vector<const std::vector<double>*> fields;
  fields.reserve(slots.size());
  for (const auto& a : slots) fields.push_back(&cache.get(a));
  double s = 0;
  for (std::size_t f = 0; f < v.values.size(); ++f) {
    double prod = v.values[f];
    for (const auto* fld : fields) prod *= (*fld)[f];
    s += prod;
  }
  return s * pow_int(v.grid.spacing(), v.grid.dim);
}

}  // namespace

HeatCoefficients heat_coefficients(const Potential& v, int m, int kmax) {
  if (m < 0) throw std::invalid_argument("heat_coefficients: need m >= 0");
  if (kmax < 2 || kmax > 4)
    throw std::invalid_argument("heat_coefficients: kmax must be in [2, 4]");
  const SpectralRep rep = fourier(v);
  AliasCheck alias;
  sobolev_norm_sq(rep, static_cast<double>(m), &alias);
  if (alias.flagged && v.linf_norm > 0)
    throw NumericsError("heat_coefficients: order-m spectrum is not alias-clean");

  HeatCoefficients hc;
  hc.dim = v.grid.dim;
  for (int j = 0; j <= m; ++j) hc.a.push_back(a_coeff(j));

  const double linf = v.linf_norm;
  auto gnm_ratio = [&](int k, int j, double value) {
    const double rhs = pow_int(linf, k - 2) * hm_norm_sq(rep, j);
    return rhs > 0 ? std::abs(value) / rhs : 0.0;
  };

  hc.sources.push_back({1, 1, v.integral(), 0.0});
  for (int j = 0; j <= m; ++j) {
    const double val = a_coeff(j) * sobolev_norm_sq(rep, static_cast<double>(j));
    hc.sources.push_back({2, 2 + j, val, gnm_ratio(2, j, val)});
  }

  DerivativeCache cache(v);
  const int n = v.grid.dim;
  for (int k = 3; k <= kmax; ++k) {
    const int slots = k - 1;
    double kfac = 1;
    for (int i = 2; i <= k; ++i) kfac *= i;

    // j = 0: B_0 = (1/k!) int V^k
    {
      double s = 0;
      for (double val : v.values) s += pow_int(val, k);
      const double c0 = s * pow_int(v.grid.spacing(), n) / kfac;
      hc.sources.push_back({k, k, c0, gnm_ratio(k, 0, c0)});
    }
    if (m < 1) continue;
    const SimplexQMoments qm = simplex_q_moments(k);
    auto qbar = [&](int p, int q) { return qm.qbar[static_cast<std::size_t>(p) * slots + q]; };
    auto qq = [&](int p, int q, int l, int mm) {
      return qm.qq[((static_cast<std::size_t>(p) * slots + q) * slots + l) * slots + mm];
    };

    // j = 1: E_1 = sum_{p,q} qbar_pq T_pq with T from one eta factor per index.
    {
      double e1 = 0;
      for (int p = 0; p < slots; ++p)
        for (int q = 0; q < slots; ++q) {
          double t_pq = 0;
          for (int a = 0; a < n; ++a) {
            std::vector<std::array<int, 3>> sl(slots, {0, 0, 0});
            sl[p][a] += 1;
            sl[q][a] += 1;
            // remaining slots carry V itself (zero multi-index)
            t_pq += product_integral(cache, sl);
          }
          e1 += qbar(p, q) * t_pq;
        }
      hc.sources.push_back({k, k + 1, e1, gnm_ratio(k, 1, e1)});
    }
    if (m < 2) continue;

    // j = 2: E_2 / 2 with the fourth moments of the chain form.
    {
      double e2 = 0;
      for (int p = 0; p < slots; ++p)
        for (int q = 0; q < slots; ++q)
          for (int l = 0; l < slots; ++l)
            for (int mm = 0; mm < slots; ++mm) {
              const double w = qq(p, q, l, mm);
              if (w == 0) continue;
              double tt = 0;
              for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                  std::vector<std::array<int, 3>> sl(slots, {0, 0, 0});
                  sl[p][a] += 1;
                  sl[q][a] += 1;
                  sl[l][b] += 1;
                  sl[mm][b] += 1;
                  tt += product_integral(cache, sl);
                }
              e2 += w * tt;
            }
      const double c2 = 0.5 * e2;
      hc.sources.push_back({k, k + 2, c2, gnm_ratio(k, 2, c2)});
    }
  }
  return hc;
}

double exp_remainder(int m, double s) {
  if (m < 1) throw std::invalid_argument("exp_remainder: need m >= 1");
  if (!(s >= 0)) throw std::invalid_argument("exp_remainder: need s >= 0");
  if (s < 0.5) {
    // r_m(s) = sum_{i>=0} (-s)^i m!/(m+i)!
    double term = 1.0, sum = 1.0;
    for (int i = 1; i < 200; ++i) {
      term *= -s / (m + i);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  double partial = 0, fact = 1;
  for (int j = 0; j < m; ++j) {
    partial += std::pow(-s, j) / fact;
    fact *= (j + 1);
  }
  // fact == m! here
  return (std::exp(-s) - partial) * ((m % 2 == 0) ? 1.0 : -1.0) * fact / std::pow(s, m);
}

ExpansionFit fit_expansion(const std::vector<HeatTracePoint>& samples, int dim, double p_max,
                           double p_step, double p_min) {
  ExpansionFit fit;
  for (double p = p_min; p <= p_max + 1e-12; p += p_step) fit.powers.push_back(p);
  const int np = static_cast<int>(fit.powers.size());
  const int ns = static_cast<int>(samples.size());
  if (np < 1) throw std::invalid_argument("fit_expansion: empty power grid");
  if (ns < 3 * np)
    throw std::invalid_argument("fit_expansion: need at least 3 samples per fitted power");
  double tlo = samples.front().t, thi = samples.front().t;
  for (const auto& s : samples) {
    tlo = std::min(tlo, s.t);
    thi = std::max(thi, s.t);
  }
  if (thi / tlo < 99.0)
    throw std::invalid_argument("fit_expansion: t-grid must span at least two decades");

  Eigen::MatrixXd X(ns, np);
  Eigen::VectorXd y(ns);
  fit.ts.resize(ns);
  for (int i = 0; i < ns; ++i) {
    const double t = samples[i].t;
    fit.ts[i] = t;
    y(i) = std::pow(4.0 * kPi * t, 0.5 * dim) * samples[i].value;
    for (int j = 0; j < np; ++j) X(i, j) = std::pow(t, fit.powers[j]);
  }
  Eigen::VectorXd colnorm(np);
  for (int j = 0; j < np; ++j) {
    colnorm(j) = X.col(j).norm();
    X.col(j) /= colnorm(j);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  fit.condition = svd.singularValues()(0) / svd.singularValues()(np - 1);
  if (!(fit.condition < 1e10))
    throw std::invalid_argument(
        "fit_expansion: ill-conditioned design (condition > 1e10); use fewer powers");
  Eigen::VectorXd beta_scaled = svd.solve(y);
  Eigen::VectorXd beta(np);
  for (int j = 0; j < np; ++j) beta(j) = beta_scaled(j) / colnorm(j);

  Eigen::VectorXd resid = y - X * beta_scaled;
  const double dof = std::max(1, ns - np);
  const double sigma2 = resid.squaredNorm() / dof;
  // covariance of the scaled coefficients: V diag(1/s^2) V^T sigma2
  Eigen::MatrixXd Vm = svd.matrixV();
  for (int j = 0; j < np; ++j) {
    double var = 0;
    for (int l = 0; l < np; ++l) {
      const double s = svd.singularValues()(l);
      var += Vm(j, l) * Vm(j, l) / (s * s);
    }
    fit.coeff_stderr.push_back(std::sqrt(var * sigma2) / colnorm(j));
    fit.coeffs.push_back(beta(j));
  }
  fit.residuals.resize(ns);
  fit.r_curve.resize(ns);
  for (int i = 0; i < ns; ++i) {
    fit.residuals[i] = resid(i);
    fit.r_curve[i] = resid(i) / std::pow(fit.ts[i], p_max);
  }
  // log-log slope of |r| over the two smallest decades
  std::vector<double> lx, ly;
  for (int i = 0; i < ns; ++i)
    if (fit.ts[i] <= tlo * 100.0 && fit.r_curve[i] != 0.0) {
      lx.push_back(std::log(fit.ts[i]));
      ly.push_back(std::log(std::abs(fit.r_curve[i])));
    }
  fit.divergence_exponent = (lx.size() >= 2) ? theil_sen_slope(lx, ly) : 0.0;
  return fit;
}

std::vector<HeatTracePoint> trace_curve(const Potential& v, const std::vector<double>& ts,
                                        const TraceCurveOptions& opts) {
  const int n = v.grid.dim;
  std::vector<HeatTracePoint> out(ts.size());
  const double i1 = v.integral();

  // normalized W2 integrand G2(t): (4 pi t)^{n/2} W2 = t^2 G2(t)
  const SpectralRep rep = fourier(v);
  std::vector<double> a2(rep.coeffs.size()), f2(rep.coeffs.size());
  for (std::size_t f = 0; f < a2.size(); ++f) {
    a2[f] = std::norm(rep.coeffs[f]);
    f2[f] = rep.freq_sq(f);
  }
  const double norm2 = rep.dual_cell() / pow_int(2.0 * kPi, n);
  const QuadNodes gl = gauss_legendre(64, 0.0, 1.0);
  auto g2_of = [&](double t) {
    double acc = 0;
    for (int i = 0; i < 64; ++i) {
      const double s = t * gl.x[i] * (1.0 - gl.x[i]);
      double inner = 0;
      for (std::size_t f = 0; f < a2.size(); ++f)
        if (a2[f] != 0.0) inner += std::exp(-s * f2[f]) * a2[f];
      acc += gl.w[i] * inner;
    }
    return 0.5 * acc * norm2;
  };

  Bt3Curve b3;
  if (opts.include_w3) {
    if (n != 1)
      throw std::invalid_argument("trace_curve: deterministic W_3 is one-dimensional only");
    b3 = bt3_deterministic(v, ts);
  }
  std::vector<BtEstimate> b4;
  if (opts.include_w4 && v.linf_norm > 0)
    b4 = bt_mc_curve(v, ts, 4, opts.w4_samples, rng::Stream(opts.seed));

  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double t = ts[i];
    const double g2 = g2_of(t);
    double y = -t * i1 + t * t * g2;
    double noise = 1e-14 * std::abs(t * t * g2);
    if (opts.include_w3) {
      y -= pow_int(t, 3) * b3.values[i];
      noise += pow_int(t, 3) * b3.quad_error;
    }
    if (!b4.empty()) {
      y += pow_int(t, 4) * b4[i].value;
      noise += pow_int(t, 4) * b4[i].std_error;
    }
    const double pref = std::pow(4.0 * kPi * t, -0.5 * n);
    out[i] = {t, pref * y, pref * noise};
  }
  return out;
}

RegularityReport classify_regularity(const Potential& v, int m_max, const ClassifyOptions& opts) {
  if (m_max < 0 || m_max > 3)
    throw std::invalid_argument("classify_regularity: supported orders are m <= 3");
  RegularityReport rep;
  const std::vector<double> ts = geometric_grid(opts.t_min, opts.t_max, opts.t_points);
  rep.curve = trace_curve(v, ts, opts.curve);
  const double rho = std::exp(std::log(opts.t_max / opts.t_min) / (opts.t_points - 1));

  // y = (4 pi t)^{n/2} trace with its noise estimate
  std::vector<double> y(ts.size()), sig(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double pref = std::pow(4.0 * kPi * ts[i], 0.5 * v.grid.dim);
    y[i] = pref * rep.curve[i].value;
    sig[i] = pref * rep.curve[i].sigma;
  }

  const double window_hi = opts.t_min * 100.0;  // two smallest decades
  bool failed = false;
  for (int m = 0; m <= m_max; ++m) {
    // Exact annihilation of the fitted polynomial part: the scaled difference
    // f(rho t) - rho^j f(t) kills c_j t^j without estimating c_j, so no
    // least-squares leakage can masquerade as a divergent remainder. This is
    // the local-interpolant realization of subtracting the fitted sum.
    std::vector<double> z = y, zs = sig;
    double gain = 1.0;
    for (int j = 1; j <= m + 1; ++j) {
      const double rj = std::pow(rho, j);
      for (std::size_t i = 0; i + 1 < z.size(); ++i) {
        z[i] = z[i + 1] - rj * z[i];
        zs[i] = std::sqrt(zs[i + 1] * zs[i + 1] + rj * rj * zs[i] * zs[i]);
      }
      z.pop_back();
      zs.pop_back();
      gain *= std::pow(rho, m + 2.0) - rj;
    }

    RegularityVerdict verd;
    verd.m = m;
    std::vector<double> lx, ly, noise_ratio;
    double zmax = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      zmax = std::max(zmax, std::abs(z[i]));
      if (ts[i] > window_hi) continue;
      const double r = z[i] / (gain * std::pow(ts[i], m + 2.0));
      const double nse = zs[i] / (gain * std::pow(ts[i], m + 2.0));
      if (r != 0.0) {
        lx.push_back(std::log(ts[i]));
        ly.push_back(std::log(std::abs(r)));
        noise_ratio.push_back(std::abs(nse / r));
      }
    }
    if (zmax == 0.0) {
      verd.bounded = true;  // identically vanishing trace data
    } else if (lx.size() < 4) {
      verd.inconclusive = true;
    } else {
      verd.slope = theil_sen_slope(lx, ly);
      std::vector<double> nr = noise_ratio;
      std::nth_element(nr.begin(), nr.begin() + nr.size() / 2, nr.end());
      verd.inconclusive = nr[nr.size() / 2] > 0.5;
      verd.bounded = verd.slope >= -opts.slope_tol;
    }
    if (verd.bounded && !verd.inconclusive && rep.largest_passing == m - 1)
      rep.largest_passing = m;
    if (!verd.bounded && !verd.inconclusive && !failed) {
      rep.divergence_exponent = verd.slope;
      failed = true;
    }
    rep.any_inconclusive = rep.any_inconclusive || verd.inconclusive;
    rep.verdicts.push_back(verd);
  }
  return rep;
}

GnmReport gnm_check(const std::vector<Potential>& fields,
                    const std::vector<std::array<int, 3>>& alphas, int m) {
  const int k = static_cast<int>(fields.size());
  if (k < 2 || alphas.size() != fields.size())
    throw std::invalid_argument("gnm_check: need k >= 2 fields with matching multi-indices");
  int total = 0;
  for (const auto& a : alphas) {
    int ord = a[0] + a[1] + a[2];
    if (ord > m) throw std::invalid_argument("gnm_check: |alpha_j| must be <= m");
    total += ord;
  }
  if (total != 2 * m) throw std::invalid_argument("gnm_check: need sum |alpha_j| = 2m");
  const GridSpec& g = fields.front().grid;
  for (const auto& f : fields)
    if (!(f.grid == g)) throw std::invalid_argument("gnm_check: fields must share one grid");

  double lhs = 0;
  std::vector<std::vector<double>> dfields;
  for (int j = 0; j < k; ++j) {
    AliasCheck alias;
    sobolev_norm_sq(fields[j], static_cast<double>(m), &alias);
    if (alias.flagged && fields[j].linf_norm > 0)
      throw NumericsError("gnm_check: field spectrum is not alias-clean at order m");
    dfields.push_back(spectral_derivative(fields[j], alphas[j]));
  }
  for (std::size_t f = 0; f < g.size(); ++f) {
    double prod = 1;
    for (int j = 0; j < k; ++j) prod *= dfields[j][f];
    lhs += std::abs(prod);
  }
  lhs *= pow_int(g.spacing(), g.dim);

  double sup_sum = 0, dm_sum = 0;
  for (int j = 0; j < k; ++j) {
    sup_sum += fields[j].linf_norm;
    dm_sum += std::sqrt(sobolev_norm_sq(fields[j], static_cast<double>(m)));
  }
  GnmReport out;
  out.lhs = lhs;
  out.rhs = pow_int(sup_sum, k - 2) * dm_sum * dm_sum;
  out.ratio = out.rhs > 0 ? lhs / out.rhs : 0.0;
  return out;
}

HolderReport holder_form_check(const std::vector<Potential>& fields,
                               const std::vector<double>& p, const SimplexPoint& r, double t,
                               long samples, rng::Stream stream) {
  const int k = static_cast<int>(fields.size());
  if (k < 2 || p.size() != fields.size())
    throw std::invalid_argument("holder_form_check: need k >= 2 fields with exponents");
  if (r.k() != k) throw std::invalid_argument("holder_form_check: simplex point order mismatch");
  double inv_sum = 0;
  for (double pj : p) {
    if (!(pj >= 2)) throw std::invalid_argument("holder_form_check: need p_j >= 2");
    if (!std::isinf(pj)) inv_sum += 1.0 / pj;
  }
  if (std::abs(inv_sum - 1.0) > 1e-9)
    throw std::invalid_argument("holder_form_check: exponents must satisfy sum 1/p_j = 1");
  const GridSpec& g = fields.front().grid;
  const int dim = g.dim;

  const GaussianChain chain = telescope_quadform(r, t, dim);
  const double hn = pow_int(g.spacing(), dim);
  const double scale = std::sqrt(2.0 * t);

  const int nb = static_cast<int>(std::clamp<long>(samples / 500, 8, 64));
  const long per_batch = (samples + nb - 1) / nb;
  std::vector<double> means(nb, 0.0);
  for (int b = 0; b < nb; ++b) {
    rng::Stream sub = stream.split(b);
    double acc = 0;
    std::array<double, 3> y{0, 0, 0};
    for (long s = 0; s < per_batch; ++s) {
      std::vector<double> u = sample_chain_unit(chain, sub);
      for (auto& x : u) x *= scale;
      double sum = 0;
      for (std::size_t f = 0; f < g.size(); ++f) {
        double prod = fields[0].values[f];
        if (prod == 0) continue;
        const auto x0 = g.point(f);
        for (int j = 1; j < k && prod != 0.0; ++j) {
          for (int d = 0; d < dim; ++d)
            y[d] = x0[d] + u[static_cast<std::size_t>(j - 1) * dim + d];
          prod *= fields[j].evaluate(y);
        }
        sum += prod;
      }
      acc += sum * hn;
    }
    means[b] = acc / static_cast<double>(per_batch);
  }
  const MeanStderr ms = batch_statistics(means);
  HolderReport out;
  out.form = ms.mean;
  out.std_error = ms.stderr_;
  out.bound = 1;
  for (int j = 0; j < k; ++j) out.bound *= fields[j].lp_norm(p[j]);
  out.converged = ms.stderr_ <= std::max(std::abs(ms.mean), 1e-12);
  out.holds = std::abs(out.form) <= out.bound + 3.0 * out.std_error;
  return out;
}

double w2_saturation_integral(const Potential& v, double t) {
  if (!(t > 0)) throw std::invalid_argument("w2_saturation_integral: need t > 0");
  const SpectralRep rep = fourier(v);
  const double norm = rep.dual_cell() / pow_int(2.0 * kPi, v.grid.dim);
  const QuadNodes gl = gauss_legendre(64, 0.0, 1.0);
  double acc = 0;
  for (int i = 0; i < 64; ++i) {
    const double s = t * gl.x[i] * (1.0 - gl.x[i]);
    double inner = 0;
    for (std::size_t f = 0; f < rep.coeffs.size(); ++f) {
      const double a2 = std::norm(rep.coeffs[f]);
      if (a2 != 0.0) inner += -std::expm1(-s * rep.freq_sq(f)) * a2;
    }
    acc += gl.w[i] * inner;
  }
  return acc * norm / t;
}

}  // namespace spectrace
