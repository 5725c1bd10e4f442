#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "oracles.hpp"
#include "spectrace/potential.hpp"
#include "spectrace/rng.hpp"
#include "spectrace/spectral.hpp"

using namespace spectrace;

namespace {

GridSpec grid1d(int n, double L = 8.0) { return {1, L, n}; }

Potential random_band_field(const GridSpec& g, rng::Stream& stream, double radius = 2.0) {
  // random smooth compactly supported field: windowed finite Fourier sum
  std::vector<double> c(6), s(6);
  for (int m = 0; m < 6; ++m) {
    c[m] = stream.uniform() - 0.5;
    s[m] = stream.uniform() - 0.5;
  }
  const int dim = g.dim;
  auto eval = [c, s, radius, dim](const std::array<double, 3>& x) {
    double r2 = 0;
    for (int d = 0; d < dim; ++d) r2 += x[d] * x[d];
    const double u2 = r2 / (radius * radius);
    if (u2 >= 1.0) return 0.0;
    const double window = std::exp(1.0 - 1.0 / (1.0 - u2));
    double f = 0;
    for (int m = 0; m < 6; ++m)
      f += c[m] * std::cos(0.9 * m * x[0]) + s[m] * std::sin(1.1 * m * x[0] + 0.3 * x[1]);
    return window * f;
  };
  return make_custom(g, eval, radius);
}

}  // namespace

TEST_CASE("well builder: grid integral matches the closed form") {
  const auto p = make_well(grid1d(1024), 1.0, 1.0);
  CHECK(p.integral() == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(p.linf_norm == doctest::Approx(1.0));
  CHECK(p.support_radius == 1.0);
  // also away from grid alignment
  const auto q = make_well(grid1d(1000, 7.3), 0.7, 1.13);
  CHECK(q.integral() == doctest::Approx(-0.7 * 2 * 1.13).epsilon(1e-12));
}

TEST_CASE("bump with zero amplitude is the zero field") {
  const auto p = make_bump(grid1d(256), 0.0, 1.0);
  for (double v : p.values) CHECK(v == 0.0);
}

TEST_CASE("delta_approx: unit mass and 1/eps sup norm") {
  const auto g = grid1d(2048);
  for (double eps : {0.5, 0.1, 0.02}) {
    const auto p = make_delta_box(g, 1.0, eps);
    CHECK(p.integral() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.linf_norm == doctest::Approx(1.0 / eps).epsilon(1e-12));
  }
  CHECK_THROWS_AS(make_delta_box(g, 1.0, 1e-5), std::invalid_argument);
}

TEST_CASE("builder validation") {
  CHECK_THROWS_AS(make_well(grid1d(1024), 1.0, 7.0), std::invalid_argument);  // guard margin
  CHECK_THROWS_AS(make_well({1, 8.0, 1023}, 1.0, 1.0), std::invalid_argument);  // odd N
  CHECK_THROWS_AS(make_well(grid1d(1024), std::nan(""), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_potential("well", {{"depth", 1.0}}, grid1d(1024)),
                  std::invalid_argument);  // missing param
}

TEST_CASE("fourier of the well matches -2 sin(xi)/xi") {
  // The sampled indicator deviates from the analytic transform at
  // O((h xi)^2) from the edge cells, so the achievable accuracy at
  // N = 4096, L = 8 is ~5e-4 relative; the refinement check below pins the
  // second-order convergence towards the closed form.
  auto worst_rel = [](int n, double L) {
    const auto p = make_well({1, L, n}, 1.0, 1.0);
    const auto rep = fourier(p);
    double worst = 0;
    for (int k = 0; k < n; ++k) {
      const double xi = p.grid.freq(k);
      if (std::abs(xi) > 20.0 || xi == 0.0) continue;
      const double exact = -2.0 * std::sin(xi) / xi;
      CHECK(std::abs(rep.coeffs[k].imag()) < 1e-12);
      if (std::abs(exact) < 1e-3) continue;  // relative error near zeros is meaningless
      worst = std::max(worst, std::abs(rep.coeffs[k].real() - exact) / std::abs(exact));
    }
    return worst;
  };
  const double e1 = worst_rel(4096, 8.0);
  const double e2 = worst_rel(8192, 8.0);
  CHECK(e1 < 5.5e-4);
  CHECK(e1 / e2 > 3.5);  // O(h^2)
  CHECK(worst_rel(4096, 2.0) < 3e-5);
}

TEST_CASE("fourier: zero field, conjugate symmetry, round trip") {
  const auto zero = make_bump(grid1d(256), 0.0, 1.0);
  for (auto c : fourier(zero).coeffs) CHECK(std::abs(c) == 0.0);

  rng::Stream stream(7);
  for (int dim = 1; dim <= 2; ++dim) {
    GridSpec g{dim, 6.0, dim == 1 ? 512 : 64};
    const auto p = random_band_field(g, stream);
    const auto rep = fourier(p);
    // conjugate symmetry Vhat(-xi) = conj(Vhat(xi))
    double scale = 0;
    for (auto c : rep.coeffs) scale = std::max(scale, std::abs(c));
    const int N = g.points_per_axis;
    for (std::size_t f = 0; f < rep.coeffs.size(); ++f) {
      auto idx = g.unflatten(f);
      std::array<int, 3> nid{0, 0, 0};
      for (int d = 0; d < dim; ++d) nid[d] = (N - idx[d]) % N;
      const auto mirrored = rep.coeffs[g.flatten(nid)];
      CHECK(std::abs(mirrored - std::conj(rep.coeffs[f])) <= 1e-12 * scale);
    }
    // round trip
    const auto back = inverse_fourier(rep);
    double vmax = 0, err = 0;
    for (std::size_t f = 0; f < back.size(); ++f) {
      vmax = std::max(vmax, std::abs(p.values[f]));
      err = std::max(err, std::abs(back[f] - p.values[f]));
    }
    CHECK(err <= 1e-12 * vmax);
  }
}

TEST_CASE("Parseval on the grid") {
  rng::Stream stream(11);
  const auto p = random_band_field(grid1d(512), stream);
  const auto rep = fourier(p);
  double grid_sum = 0;
  for (double v : p.values) grid_sum += v * v;
  grid_sum *= p.grid.spacing();
  double dual_sum = 0;
  for (auto c : rep.coeffs) dual_sum += std::norm(c);
  dual_sum *= rep.dual_cell() / (2.0 * kPi);
  CHECK(grid_sum == doctest::Approx(dual_sum).epsilon(1e-10));
}

TEST_CASE("sobolev norm: closed form, zero field, FD cross-check") {
  // grid chosen so the well edge falls mid-cell: the grid L2 norm is then
  // h-exact and hits the closed form 2 a V0^2
  const auto well = make_well(grid1d(1032), 1.0, 1.0);
  CHECK(sobolev_norm_sq(well, 0.0) == doctest::Approx(2.0).epsilon(1e-8));

  const auto zero = make_bump(grid1d(256), 0.0, 1.0);
  for (double s : {0.0, 1.0, 2.5}) CHECK(sobolev_norm_sq(zero, s) == 0.0);

  // s = 1 against a second, independent discretization (centered differences)
  const auto bump = make_bump(grid1d(2048), 1.0, 1.0);
  const double spectral = sobolev_norm_sq(bump, 1.0);
  const GridSpec& g = bump.grid;
  const double h = g.spacing();
  double fd = 0;
  for (int i = 0; i < g.points_per_axis; ++i) {
    const int ip = (i + 1) % g.points_per_axis,
              im = (i - 1 + g.points_per_axis) % g.points_per_axis;
    const double d = (bump.values[ip] - bump.values[im]) / (2 * h);
    fd += d * d;
  }
  fd *= h;
  CHECK(spectral == doctest::Approx(fd).epsilon(1e-3));
}

TEST_CASE("sobolev norm monotone in s for normalized wide-spectrum fields") {
  // narrow bumps carry their spectral mass above one frequency unit
  for (double a : {0.25, 0.35, 0.5}) {
    auto bump = make_bump(grid1d(2048), 1.0, a);
    const double l2 = std::sqrt(sobolev_norm_sq(bump, 0.0));
    for (auto& v : bump.values) v /= l2;
    double prev = sobolev_norm_sq(bump, 0.0);
    for (double s : {0.5, 1.0, 1.5, 2.0}) {
      const double cur = sobolev_norm_sq(bump, s);
      CHECK(cur >= prev * (1.0 - 1e-12));
      prev = cur;
    }
  }
}

TEST_CASE("sobolev aliasing warning for rough fields at high order") {
  const auto well = make_well(grid1d(256), 1.0, 1.0);
  AliasCheck alias;
  sobolev_norm_sq(well, 3.0, &alias);
  CHECK(alias.flagged);  // |xi|^6 |Vhat|^2 piles mass onto the top band
  const auto bump = make_bump(grid1d(256), 1.0, 1.0);
  sobolev_norm_sq(bump, 1.0, &alias);
  CHECK_FALSE(alias.flagged);
}

TEST_CASE("mollify: sup-norm contraction, zero field, L2 convergence") {
  const auto well = make_well(grid1d(1024), 1.0, 1.0);
  const auto m = mollify(well, 0.1);
  CHECK(m.linf_norm <= well.linf_norm + 1e-14);

  const auto zero = make_bump(grid1d(256), 0.0, 1.0);
  const auto mz = mollify(zero, 0.3);
  for (double v : mz.values) CHECK(v == 0.0);

  double prev = 1e300;
  for (double eps : {0.4, 0.2, 0.1}) {
    const auto me = mollify(well, eps);
    double diff = 0;
    for (std::size_t f = 0; f < me.values.size(); ++f) {
      const double d = me.values[f] - well.values[f];
      diff += d * d;
    }
    diff = std::sqrt(diff * well.grid.spacing());
    CHECK(diff < prev);
    prev = diff;
  }
  CHECK(prev < 0.2);

  CHECK_THROWS_AS(mollify(well, 0.5 * well.grid.spacing()), std::invalid_argument);
}

TEST_CASE("mollify contracts L-inf and H^m over a randomized family") {
  rng::Stream stream(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_band_field(grid1d(256, 6.0), stream, 1.5);
    const double eps = 0.1 + 0.3 * stream.uniform();
    const auto m = mollify(p, eps);
    CHECK(m.linf_norm <= p.linf_norm * (1.0 + 1e-12) + 1e-14);
    for (int ord : {0, 1, 2})
      CHECK(hm_norm_sq(m, ord) <= hm_norm_sq(p, ord) * (1.0 + 1e-10) + 1e-14);
  }
}

TEST_CASE("potential file format round-trips at full precision") {
  rng::Stream stream(31);
  const auto p = random_band_field(grid1d(128, 4.0), stream, 1.2);
  const std::string path = (std::filesystem::temp_directory_path() / "spectrace_pot.txt").string();
  write_potential(path, p);
  const auto q = read_potential(path);
  REQUIRE(q.values.size() == p.values.size());
  for (std::size_t f = 0; f < p.values.size(); ++f) CHECK(q.values[f] == p.values[f]);
  CHECK(q.grid.half_width == p.grid.half_width);
  CHECK(q.support_radius == p.support_radius);

  // reader rejects mismatched counts
  std::FILE* fh = std::fopen(path.c_str(), "a");
  std::fprintf(fh, "0.5\n");
  std::fclose(fh);
  CHECK_THROWS(read_potential(path));
  std::filesystem::remove(path);
}
