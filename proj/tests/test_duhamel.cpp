#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "spectrace/duhamel.hpp"
#include "spectrace/heat_oracle.hpp"
#include "spectrace/potential.hpp"
#include "spectrace/spectral.hpp"

using namespace spectrace;

namespace {

Potential the_well(int n = 2048) { return make_well({1, 8.0, n}, 1.0, 1.0); }

Potential zero_field() { return make_bump({1, 8.0, 256}, 0.0, 1.0); }

}  // namespace

TEST_CASE("trace_w1: closed form, zero field, exact linearity") {
  const auto well = the_well();
  const double t = 0.01;
  CHECK(trace_w1(well, t) ==
        doctest::Approx(std::pow(4.0 * kPi * t, -0.5) * t * (-2.0)).epsilon(1e-10));
  CHECK(trace_w1(well, t) == doctest::Approx(-0.0564190).epsilon(1e-5));

  for (double tt : {0.001, 0.1, 1.0}) CHECK(trace_w1(zero_field(), tt) == 0.0);

  auto doubled = the_well();
  for (auto& v : doubled.values) v *= 2.0;
  doubled.linf_norm *= 2.0;
  CHECK(trace_w1(doubled, t) == 2.0 * trace_w1(well, t));
  CHECK_THROWS_AS(trace_w1(well, -1.0), std::invalid_argument);
}

TEST_CASE("trace_w2: t->0 limit, zero field, normalized monotonicity") {
  const auto well = the_well(4096);
  // (4 pi t)^{n/2} t^{-2} tr W_2 -> ||V||^2/2; the indicator's sqrt(t)
  // correction is 0.22 sqrt(t), so the 0.1% window needs t <= 1e-5
  const double l2h = 0.5 * sobolev_norm_sq(well, 0.0);
  {
    const auto w2 = trace_w2(well, 1e-5);
    const double lim = std::pow(4.0 * kPi * 1e-5, 0.5) * w2.value / 1e-10;
    CHECK(lim == doctest::Approx(l2h).epsilon(1.2e-3));
    CHECK(w2.rel_quad_error < 1e-8);
  }
  {  // and the convergence trend toward the limit
    double prev = 1e300;
    for (double t : {1e-2, 1e-3, 1e-4}) {
      const auto w2 = trace_w2(well, t);
      const double dev = std::abs(std::pow(4.0 * kPi * t, 0.5) * w2.value / (t * t) - l2h);
      CHECK(dev < prev);
      prev = dev;
    }
  }

  CHECK(trace_w2(zero_field(), 0.05).value == 0.0);

  double prev = 1e300;
  for (double t : {0.01, 0.05, 0.2, 0.8}) {
    const auto w2 = trace_w2(well, t);
    const double normalized = w2.value / (t * t * std::pow(4.0 * kPi * t, -0.5));
    CHECK(normalized <= prev + 1e-14);
    prev = normalized;
  }
}

TEST_CASE("bt_mc: B_0 limit, zero field, Hoelder bound, multilinearity") {
  const auto well = the_well();

  // B_t -> B_0 = (1/3!) int V^3 = -1/3, monotone over a decade
  double prev_gap = 1e300;
  for (double t : {1e-1, 1e-2, 1e-3}) {
    const auto e = bt_mc(well, t, 3, 50000, rng::Stream(2));
    const double gap = std::abs(e.value - (-1.0 / 3.0));
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 4e-3 + 3.0 * 1e-3);

  {  // V = 0: exactly zero with zero SE
    const auto e = bt_mc(zero_field(), 0.01, 3, 2000, rng::Stream(3));
    CHECK(e.value == 0.0);
    CHECK(e.std_error == 0.0);
    CHECK(e.converged);
  }

  // |B_t| <= prod ||V||_{L^3}^3 = int |V|^3 = 2 for the well at every t
  for (double t : {1e-3, 0.05, 0.3}) {
    const auto e = bt_mc(well, t, 3, 20000, rng::Stream(4));
    CHECK(std::abs(e.value) <= 2.0 + 3.0 * e.std_error);
  }

  // exact alpha^k scaling on the same stream
  auto scaled = the_well();
  for (auto& v : scaled.values) v *= 1.7;
  scaled.linf_norm *= 1.7;
  scaled.profile = Potential::Profile{
      [](const std::array<double, 3>& x) { return std::abs(x[0]) <= 1.0 ? -1.7 : 0.0; },
      {-1.0, 1.0},
      true};
  const auto a = bt_mc(well, 0.02, 4, 5000, rng::Stream(5));
  const auto b = bt_mc(scaled, 0.02, 4, 5000, rng::Stream(5));
  const double a4 = 1.7 * 1.7 * 1.7 * 1.7;
  CHECK(b.value == doctest::Approx(a4 * a.value).epsilon(1e-13));

  CHECK_THROWS_AS(bt_mc(well, 0.01, 2, 5000, rng::Stream(1)), std::invalid_argument);
  CHECK_THROWS_AS(bt_mc(well, 0.01, 3, 10, rng::Stream(1)), std::invalid_argument);
}

TEST_CASE("bt3_deterministic agrees with the Monte Carlo route") {
  const auto well = the_well();
  const std::vector<double> ts{1e-3, 1e-2, 0.05};
  const auto det = bt3_deterministic(well, ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto mc = bt_mc(well, ts[i], 3, 100000, rng::Stream(6));
    // bilinear interpolation of the kinked correlogram biases the
    // deterministic route at the few-1e-4 level
    CHECK(det.values[i] == doctest::Approx(mc.value).epsilon(2e-3));
  }
  // and the smooth-field case at tighter tolerance
  const auto bump = make_bump({1, 8.0, 1024}, -1.0, 1.5);
  const auto db = bt3_deterministic(bump, ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto mc = bt_mc(bump, ts[i], 3, 100000, rng::Stream(7));
    CHECK(db.values[i] == doctest::Approx(mc.value).epsilon(5e-4));
  }
}

TEST_CASE("tail_bound: monotone to zero, zero field, range guard") {
  const auto well = the_well(512);
  double prev = 1e300;
  for (int kmax : {1, 2, 4, 8, 16}) {
    const double b = tail_bound(kmax, 0.3, well);
    CHECK(b >= 0.0);
    CHECK(b < prev);
    prev = b;
  }
  CHECK(tail_bound(24, 0.3, well) < 1e-20);
  CHECK(tail_bound(4, 0.5, zero_field()) == 0.0);
  CHECK_THROWS_AS(tail_bound(4, 1.5, well), std::invalid_argument);
}

TEST_CASE("measured |tr W_k| dominated by the calibrated bound term (x2)") {
  const auto well = the_well(1024);
  for (double t : {0.05, 0.2}) {
    for (int k = 3; k <= 6; ++k) {
      const auto wk = trace_wk_mc(well, t, k, 20000, rng::Stream(100 + k));
      CHECK(tail_bound_term(k, t, well) >=
            2.0 * (std::abs(wk.trace) - 3.0 * wk.trace_se));
    }
  }
}

TEST_CASE("trace_total equals the eigendecomposition oracle within errors") {
  const auto well = the_well(1024);
  HeatOracle oracle(well);
  for (double t : {0.02, 0.05}) {
    const auto s = trace_total(well, t, 6, 30000, rng::Stream(8), 1.0);
    const double allowance =
        3.0 * (s.std_error + s.tail_bound + oracle.error_estimate(t)) + 1e-10;
    CHECK(std::abs(s.total - oracle.trace(t)) <= allowance);
  }

  // leading behavior: (4 pi t)^{1/2} total -> -int V * t; well -> +2t
  const double t = 0.01;
  const auto s = trace_total(well, t, 5, 30000, rng::Stream(9), 1.0);
  CHECK(std::pow(4.0 * kPi * t, 0.5) * s.total ==
        doctest::Approx(2.0 * t).epsilon(0.05));

  // zero field: total zero
  const auto z = trace_total(zero_field(), 0.05, 4, 2000, rng::Stream(10), 1.0);
  CHECK(z.total == 0.0);
  CHECK(z.tail_bound == 0.0);

  // unachievable tolerance reported as an error
  CHECK_THROWS_AS(trace_total(well, 0.9, 2, 2000, rng::Stream(11), 1e-8), NumericsError);
}

TEST_CASE("k-term scaling: log-domain comparison against the bound") {
  const auto well = the_well(1024);
  const double t = 0.1;
  for (int k = 3; k <= 6; ++k) {
    const auto wk = trace_wk_mc(well, t, k, 20000, rng::Stream(200 + k));
    const double lhs = std::log(std::abs(wk.trace) + 1e-300);
    const double rhs = std::log(tail_bound_term(k, t, well));
    CHECK(lhs <= rhs);
  }
}

TEST_CASE("series/oracle equivalence on random small potentials") {
  // the full ten-potential sweep is the acceptance suite's criterion; three
  // shapes here keep the unit suite quick
  rng::Stream shapes(77);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> amp(4);
    for (auto& a : amp) a = 0.9 * (2.0 * shapes.uniform() - 1.0);
    auto eval = [amp](const std::array<double, 3>& x) {
      const double r2 = x[0] * x[0] / 4.0;
      if (r2 >= 1.0) return 0.0;
      double f = amp[0] + amp[1] * std::sin(2.0 * x[0]) + amp[2] * std::cos(3.1 * x[0]) +
                 amp[3] * std::sin(0.7 * x[0]);
      const double w = std::exp(1.0 - 1.0 / (1.0 - r2));
      return 0.9 * w * f / (std::abs(amp[0]) + std::abs(amp[1]) + std::abs(amp[2]) +
                            std::abs(amp[3]) + 1e-9);
    };
    const auto v = make_custom({1, 8.0, 1024}, eval, 2.0);
    REQUIRE(v.linf_norm <= 1.0);
    HeatOracle oracle(v);
    for (double t : {0.02, 0.1}) {
      const auto s = trace_total(v, t, 6, 20000, rng::Stream(300 + trial), 1.0);
      const double allowance =
          3.0 * (s.std_error + s.tail_bound + oracle.error_estimate(t)) + 1e-10;
      CHECK(std::abs(s.total - oracle.trace(t)) <= allowance);
    }
  }
}
