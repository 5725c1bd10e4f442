#include "spectrace/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace spectrace {

namespace {

double radius(const std::array<double, 3>& x, int dim) {
  double r2 = 0;
  for (int d = 0; d < dim; ++d) r2 += x[d] * x[d];
  return std::sqrt(r2);
}

void check_support_guard(const GridSpec& g, double R) {
  // Periodization guard: margin L - R must be at least L/4.
  if (!(R >= 0) || !std::isfinite(R)) throw std::invalid_argument("support radius must be finite and >= 0");
  if (R > 0.75 * g.half_width)
    throw std::invalid_argument("support exceeds guard margin (need R <= 3L/4)");
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument("potential values must be finite");
}

// Overlap of the cell [xc - h/2, xc + h/2] with [-a, a], divided by h.
double cell_fraction(double xc, double h, double a) {
  const double lo = std::max(xc - 0.5 * h, -a);
  const double hi = std::min(xc + 0.5 * h, a);
  return std::max(0.0, hi - lo) / h;
}

Potential finish(Potential p) {
  p.grid.validate();
  check_finite(p.values);
  check_support_guard(p.grid, p.support_radius);
  p.linf_norm = max_abs(p.values);
  return p;
}

}  // namespace

double Potential::evaluate(const std::array<double, 3>& x) const {
  if (profile) return profile->eval(x);
  // Periodic multilinear interpolation.
  const int N = grid.points_per_axis;
  const double h = grid.spacing();
  const double L = grid.half_width;
  int base[3];
  double frac[3];
  for (int d = 0; d < grid.dim; ++d) {
    double u = (x[d] + L) / h;
    u -= std::floor(u / N) * N;  // wrap into [0, N)
    const int i0 = static_cast<int>(std::floor(u));
    base[d] = i0 % N;
    frac[d] = u - i0;
  }
  double acc = 0;
  const int corners = 1 << grid.dim;
  for (int c = 0; c < corners; ++c) {
    double w = 1;
    std::array<int, 3> idx{0, 0, 0};
    for (int d = 0; d < grid.dim; ++d) {
      const int bit = (c >> d) & 1;
      idx[d] = (base[d] + bit) % N;
      w *= bit ? frac[d] : (1.0 - frac[d]);
    }
    acc += w * values[grid.flatten(idx)];
  }
  return acc;
}

double Potential::integral() const {
  double s = 0;
  for (double v : values) s += v;
  return s * pow_int(grid.spacing(), grid.dim);
}

double Potential::lp_norm(double p) const {
  if (std::isinf(p)) return linf_norm;
  if (!(p >= 1)) throw std::invalid_argument("lp_norm: p must be >= 1");
  double s = 0;
  for (double v : values) s += std::pow(std::abs(v), p);
  return std::pow(s * pow_int(grid.spacing(), grid.dim), 1.0 / p);
}

bool Potential::grid_symmetric() const {
  const int N = grid.points_per_axis;
  for (std::size_t f = 0; f < values.size(); ++f) {
    auto idx = grid.unflatten(f);
    std::array<int, 3> rid{0, 0, 0};
    for (int d = 0; d < grid.dim; ++d) rid[d] = (N - idx[d]) % N;
    if (values[f] != values[grid.flatten(rid)]) return false;
  }
  return true;
}

Potential make_well(const GridSpec& grid, double depth, double a) {
  grid.validate();
  if (!std::isfinite(depth) || !(a > 0) || !std::isfinite(a))
    throw std::invalid_argument("well: need finite depth and radius a > 0");
  Potential p;
  p.grid = grid;
  p.support_radius = a;
  p.values.resize(grid.size());
  const double h = grid.spacing();
  if (grid.dim == 1) {
    // Cell-averaged sampling keeps the grid integral of the box h-exact and
    // makes the discrete operator see the edge at the right place regardless
    // of grid alignment.
    for (int i = 0; i < grid.points_per_axis; ++i)
      p.values[i] = -depth * cell_fraction(grid.coord(i), h, a);
  } else {
    for (std::size_t f = 0; f < p.values.size(); ++f)
      p.values[f] = (radius(grid.point(f), grid.dim) <= a) ? -depth : 0.0;
  }
  const int dim = grid.dim;
  p.profile = Potential::Profile{
      [depth, a, dim](const std::array<double, 3>& x) {
        return radius(x, dim) <= a ? -depth : 0.0;
      },
      {-a, a},
      true};
  p.regrid = [depth, a](const GridSpec& g) { return make_well(g, depth, a); };
  return finish(std::move(p));
}

Potential make_bump(const GridSpec& grid, double amplitude, double a) {
  grid.validate();
  if (!std::isfinite(amplitude) || !(a > 0) || !std::isfinite(a))
    throw std::invalid_argument("bump: need finite amplitude and radius a > 0");
  const int dim = grid.dim;
  auto eval = [amplitude, a, dim](const std::array<double, 3>& x) {
    const double r = radius(x, dim) / a;
    if (r >= 1.0) return 0.0;
    return amplitude * std::exp(1.0 - 1.0 / (1.0 - r * r));
  };
  Potential p;
  p.grid = grid;
  p.support_radius = a;
  p.values.resize(grid.size());
  for (std::size_t f = 0; f < p.values.size(); ++f) p.values[f] = eval(grid.point(f));
  p.profile = Potential::Profile{eval, {}, false};
  p.regrid = [amplitude, a](const GridSpec& g) { return make_bump(g, amplitude, a); };
  return finish(std::move(p));
}

Potential make_delta_box(const GridSpec& grid, double weight, double eps) {
  grid.validate();
  const double h = grid.spacing();
  if (!std::isfinite(weight) || !(eps > 0) || !std::isfinite(eps))
    throw std::invalid_argument("delta_approx: need finite weight and eps > 0");
  if (eps < h)
    throw std::invalid_argument("delta_approx: eps below grid resolution");
  Potential p;
  p.grid = grid;
  p.support_radius = 0.5 * eps;
  p.values.resize(grid.size());
  const double amp = weight / pow_int(eps, grid.dim);
  if (grid.dim == 1) {
    for (int i = 0; i < grid.points_per_axis; ++i)
      p.values[i] = amp * cell_fraction(grid.coord(i), h, 0.5 * eps);
  } else {
    for (std::size_t f = 0; f < p.values.size(); ++f) {
      const auto x = grid.point(f);
      bool in = true;
      for (int d = 0; d < grid.dim; ++d) in = in && std::abs(x[d]) <= 0.5 * eps;
      p.values[f] = in ? amp : 0.0;
    }
  }
  const int dim = grid.dim;
  p.profile = Potential::Profile{
      [amp, eps, dim](const std::array<double, 3>& x) {
        for (int d = 0; d < dim; ++d)
          if (std::abs(x[d]) > 0.5 * eps) return 0.0;
        return amp;
      },
      {-0.5 * eps, 0.5 * eps},
      true};
  p.regrid = [weight, eps](const GridSpec& g) { return make_delta_box(g, weight, eps); };
  return finish(std::move(p));
}

Potential make_custom(const GridSpec& grid, std::vector<double> values, double support_radius) {
  grid.validate();
  if (values.size() != grid.size())
    throw std::invalid_argument("custom: value count does not match grid");
  Potential p;
  p.grid = grid;
  p.values = std::move(values);
  p.support_radius = support_radius;
  return finish(std::move(p));
}

Potential make_custom(const GridSpec& grid,
                      std::function<double(const std::array<double, 3>&)> eval,
                      double support_radius) {
  grid.validate();
  Potential p;
  p.grid = grid;
  p.support_radius = support_radius;
  p.values.resize(grid.size());
  for (std::size_t f = 0; f < p.values.size(); ++f) p.values[f] = eval(grid.point(f));
  p.profile = Potential::Profile{eval, {}, false};
  p.regrid = [eval, support_radius](const GridSpec& g) {
    return make_custom(g, eval, support_radius);
  };
  return finish(std::move(p));
}

Potential make_potential(const std::string& kind, const std::map<std::string, double>& params,
                         const GridSpec& grid) {
  auto get = [&](const char* key) {
    auto it = params.find(key);
    if (it == params.end())
      throw std::invalid_argument("make_potential: missing parameter '" + std::string(key) +
                                  "' for kind '" + kind + "'");
    return it->second;
  };
  if (kind == "well") return make_well(grid, get("depth"), get("a"));
  if (kind == "bump") return make_bump(grid, get("amplitude"), get("a"));
  if (kind == "delta_approx") return make_delta_box(grid, get("c"), get("eps"));
  throw std::invalid_argument("make_potential: unknown kind '" + kind + "'");
}

void write_potential(const std::string& path, const Potential& p) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::fprintf(f, "# dim=%d\n", p.grid.dim);
  std::fprintf(f, "# L=%.17g\n", p.grid.half_width);
  std::fprintf(f, "# N=%d\n", p.grid.points_per_axis);
  std::fprintf(f, "# R=%.17g\n", p.support_radius);
  for (double v : p.values) std::fprintf(f, "%.17g\n", v);
  std::fclose(f);
}

Potential read_potential(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  GridSpec g;
  double R = 0;
  std::string line;
  auto header = [&](const char* key) {
    if (!std::getline(in, line)) throw std::runtime_error("truncated header in " + path);
    const std::string prefix = std::string("# ") + key + "=";
    if (line.rfind(prefix, 0) != 0)
      throw std::runtime_error("bad header line in " + path + ": " + line);
    return std::stod(line.substr(prefix.size()));
  };
  g.dim = static_cast<int>(header("dim"));
  g.half_width = header("L");
  g.points_per_axis = static_cast<int>(header("N"));
  R = header("R");
  g.validate();
  std::vector<double> vals;
  vals.reserve(g.size());
  double x;
  while (in >> x) vals.push_back(x);
  if (vals.size() != g.size())
    throw std::runtime_error("value count mismatch in " + path);
  return make_custom(g, std::move(vals), R);
}

double theil_sen_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("theil_sen_slope: need two samples");
  std::vector<double> slopes;
  slopes.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (x[j] != x[i]) slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
  if (slopes.empty()) throw std::invalid_argument("theil_sen_slope: degenerate abscissae");
  std::nth_element(slopes.begin(), slopes.begin() + slopes.size() / 2, slopes.end());
  double hi = slopes[slopes.size() / 2];
  if (slopes.size() % 2 == 0) {
    std::nth_element(slopes.begin(), slopes.begin() + slopes.size() / 2 - 1, slopes.end());
    hi = 0.5 * (hi + slopes[slopes.size() / 2 - 1]);
  }
  return hi;
}

}  // namespace spectrace
