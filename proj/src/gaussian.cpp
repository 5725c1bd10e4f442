#include "spectrace/gaussian.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "spectrace/quadrature.hpp"

namespace spectrace {

// ---------------------------------------------------------------------------
// quadrature helpers

QuadNodes gauss_legendre(int n, double a, double b) {
  gsl_integration_glfixed_table* tbl = gsl_integration_glfixed_table_alloc(n);
  QuadNodes q;
  q.x.resize(n);
  q.w.resize(n);
  for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(a, b, i, &q.x[i], &q.w[i], tbl);
  gsl_integration_glfixed_table_free(tbl);
  return q;
}

QuadNodes gauss_hermite(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = std::sqrt(i / 2.0);
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadNodes q;
  q.x.resize(n);
  q.w.resize(n);
  const double sqrt_pi = std::sqrt(kPi);
  for (int i = 0; i < n; ++i) {
    q.x[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    q.w[i] = sqrt_pi * v0 * v0;
  }
  return q;
}

namespace {
struct QagCtx {
  const std::function<double(double)>* f;
};
double qag_trampoline(double x, void* params) {
  return (*static_cast<QagCtx*>(params)->f)(x);
}
}  // namespace

QagResult integrate_qag(const std::function<double(double)>& f, double a, double b,
                        double epsabs, double epsrel) {
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(4096);
  QagCtx ctx{&f};
  gsl_function gf{&qag_trampoline, &ctx};
  QagResult out;
  gsl_error_handler_t* old = gsl_set_error_handler_off();
  const int status = gsl_integration_qag(&gf, a, b, epsabs, epsrel, 4096,
                                         GSL_INTEG_GAUSS61, ws, &out.value, &out.abserr);
  gsl_set_error_handler(old);
  gsl_integration_workspace_free(ws);
  if (status != 0 && status != GSL_EROUND)
    throw NumericsError("adaptive quadrature failed to converge");
  return out;
}

// ---------------------------------------------------------------------------
// simplex and chain

void SimplexPoint::validate() const {
  if (k() < 2) throw std::invalid_argument("SimplexPoint: need k >= 2");
  double prev = 0.0;
  for (double ri : r) {
    if (!(ri > prev) || !(ri < 1.0))
      throw std::invalid_argument("SimplexPoint: entries must satisfy 0 < r_1 < ... < r_k < 1");
    prev = ri;
  }
}

GaussianChain telescope_quadform(const SimplexPoint& rp, double t, int dim) {
  rp.validate();
  const int k = rp.k();
  const auto& r = rp.r;
  const double wrap = 1.0 + r[0] - r[k - 1];
  auto gap_ok = [](double g) { return g >= 1e-12; };
  if (!gap_ok(wrap)) throw std::invalid_argument("telescope_quadform: degenerate wrap gap");
  for (int j = 1; j < k; ++j)
    if (!gap_ok(r[j] - r[j - 1]))
      throw std::invalid_argument("telescope_quadform: degenerate gap r_{j+1}-r_j < 1e-12");

  GaussianChain c;
  c.r = rp;
  c.t = t;
  c.dim = dim;
  c.weights.resize(k - 1);
  c.shifts.assign(k - 1, 0.0);
  // w_j = (r_{j+1}-r_1)/((r_{j+1}-r_j)(r_j-r_1)), beta_j = (r_j-r_1)/(r_{j+1}-r_1)
  for (int j = 2; j <= k - 1; ++j) {
    const double num = r[j] - r[0];
    const double den = (r[j] - r[j - 1]) * (r[j - 1] - r[0]);
    c.weights[j - 2] = num / den;
    c.shifts[j - 2] = (r[j - 1] - r[0]) / (r[j] - r[0]);
  }
  c.weights[k - 2] = 1.0 / (wrap * (r[k - 1] - r[0]));
  return c;
}

double chain_quadratic_raw(const SimplexPoint& rp, const std::vector<double>& u, int dim) {
  const int k = rp.k();
  const auto& r = rp.r;
  auto block = [&](int j) { return u.data() + static_cast<std::size_t>(j - 2) * dim; };
  auto norm2 = [&](const double* a) {
    double s = 0;
    for (int d = 0; d < dim; ++d) s += a[d] * a[d];
    return s;
  };
  double q = norm2(block(k)) / (1.0 + r[0] - r[k - 1]) + norm2(block(2)) / (r[1] - r[0]);
  for (int j = 2; j <= k - 1; ++j) {
    const double* a = block(j + 1);
    const double* b = block(j);
    double s = 0;
    for (int d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    q += s / (r[j] - r[j - 1]);
  }
  return q;
}

double chain_quadratic_telescoped(const GaussianChain& c, const std::vector<double>& u) {
  const int k = c.r.k();
  const int dim = c.dim;
  double q = 0;
  for (int j = 2; j <= k; ++j) {
    const double* uj = u.data() + static_cast<std::size_t>(j - 2) * dim;
    const double* un = (j < k) ? u.data() + static_cast<std::size_t>(j - 1) * dim : nullptr;
    const double beta = c.shifts[j - 2];
    double s = 0;
    for (int d = 0; d < dim; ++d) {
      const double v = uj[d] - (un ? beta * un[d] : 0.0);
      s += v * v;
    }
    q += c.weights[j - 2] * s;
  }
  return q;
}

std::vector<double> chain_covariance(const SimplexPoint& rp, double t) {
  const int k = rp.k();
  const int m = k - 1;
  GaussianChain c = telescope_quadform(rp, t, 1);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
  // Quadratic sum w_j |u_j - beta_j u_{j+1}|^2 in the basis (u_2..u_k).
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
  Eigen::MatrixXd cov = 2.0 * t * M.inverse();
  std::vector<double> out(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(i) * m + j] = cov(i, j);
  return out;
}

SimplexPoint sample_simplex(int k, rng::Stream& stream) {
  if (k < 2) throw std::invalid_argument("sample_simplex: need k >= 2");
  SimplexPoint p;
  p.r.resize(k);
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (int i = 0; i < k; ++i) p.r[i] = stream.uniform();
    std::sort(p.r.begin(), p.r.end());
    bool ok = 1.0 + p.r.front() - p.r.back() >= 1e-12;
    for (int i = 1; i < k && ok; ++i) ok = p.r[i] - p.r[i - 1] >= 1e-12;
    if (ok) return p;
  }
  throw NumericsError("sample_simplex: persistent degenerate draws");
}

std::vector<double> sample_chain_unit(const GaussianChain& chain, rng::Stream& stream) {
  const int k = chain.r.k();
  const int dim = chain.dim;
  std::vector<double> u(static_cast<std::size_t>(k - 1) * dim);
  // Backward pass at unit scale (physical field is sqrt(2t) * unit draw):
  // u_k ~ N(0, 1/w_k) per axis, then u_j = beta_j u_{j+1} + N(0, 1/w_j).
  for (int j = k; j >= 2; --j) {
    const int a = j - 2;
    const double sd = std::sqrt(1.0 / chain.weights[a]);
    double* uj = u.data() + static_cast<std::size_t>(a) * dim;
    const double* un = (j < k) ? u.data() + static_cast<std::size_t>(a + 1) * dim : nullptr;
    for (int d = 0; d < dim; ++d)
      uj[d] = (un ? chain.shifts[a] * un[d] : 0.0) + sd * stream.normal();
  }
  return u;
}

ChainSample sample_chain(int k, double t, int dim, rng::Stream& stream) {
  if (!(t > 0)) throw std::invalid_argument("sample_chain: need t > 0");
  ChainSample s;
  s.r = sample_simplex(k, stream);
  GaussianChain chain = telescope_quadform(s.r, t, dim);
  s.u = sample_chain_unit(chain, stream);
  const double scale = std::sqrt(2.0 * t);
  for (double& x : s.u) x *= scale;
  return s;
}

SpectralRep heat_propagate(const SpectralRep& field, double s) {
  if (!(s >= 0)) throw std::invalid_argument("heat_propagate: need s >= 0");
  if (s == 0) return field;
  SpectralRep out = field;
  for (std::size_t f = 0; f < out.coeffs.size(); ++f)
    out.coeffs[f] *= std::exp(-s * out.freq_sq(f));
  return out;
}

double gamma_moment(int k, double t) {
  if (k < 0) throw std::invalid_argument("gamma_moment: need k >= 0");
  if (!(t > 0)) throw std::invalid_argument("gamma_moment: need t > 0");
  return 0.5 * std::tgamma(0.5 * (k + 1)) * std::pow(t, -0.5 * (k + 1));
}

LorentzGaussResult lorentz_gauss_integral(double s) {
  if (!(s > 0) || !(s <= 1)) throw std::invalid_argument("lorentz_gauss_integral: need 0 < s <= 1");
  const double cut = 40.0 / std::sqrt(s);
  auto integrand = [s](double r) { return std::exp(-s * r * r) / (1.0 + r * r); };
  QagResult q = integrate_qag(integrand, 0.0, cut, 1e-300, 1e-12);
  // Analytic tail bound: int_R^inf e^{-s r^2}/(1+r^2) dr <= e^{-s R^2}/(2 s R (1+R^2)).
  const double tail = std::exp(-s * cut * cut) / (2.0 * s * cut * (1.0 + cut * cut));
  LorentzGaussResult out;
  out.value = (q.value + tail) / kPi;
  out.residual = out.value - 0.5 * std::exp(s);
  return out;
}

double fit_sqrt_leading(const std::vector<double>& svals) {
  if (svals.size() < 2) throw std::invalid_argument("fit_sqrt_leading: need >= 2 samples");
  // residual/sqrt(s) = b0 + b1 s + ... ; straight-line intercept in s.
  std::vector<double> x(svals.size()), y(svals.size());
  for (std::size_t i = 0; i < svals.size(); ++i) {
    x[i] = svals[i];
    y[i] = lorentz_gauss_integral(svals[i]).residual / std::sqrt(svals[i]);
  }
  const double slope = ls_slope(x, y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= x.size(); my /= y.size();
  return my - slope * mx;
}

}  // namespace spectrace
