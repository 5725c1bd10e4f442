#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spectrace {

inline constexpr double kPi = std::numbers::pi;

/// Thrown when a numerical guard (aliasing, boundary contamination, step
/// underflow, ...) is violated, as opposed to a plain argument error.
class NumericsError : public std::runtime_error {
 public:
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

inline double pow_int(double x, int n) {
  if (n < 0) return 1.0 / pow_int(x, -n);
  double r = 1.0, b = x;
  for (; n; n >>= 1, b *= b)
    if (n & 1) r *= b;
  return r;
}

/// Pairwise (binary-tree) sum. Order is fixed by the input order, so parallel
/// producers that fill the vector by index get bit-reproducible reductions.
inline double pairwise_sum(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n == 0) return 0.0;
  if (n <= 4) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Mean and standard error of batch means, reduced pairwise.
inline MeanStderr batch_statistics(std::span<const double> batch_means) {
  const std::size_t nb = batch_means.size();
  MeanStderr out;
  if (nb == 0) return out;
  out.mean = pairwise_sum(batch_means) / static_cast<double>(nb);
  if (nb < 2) return out;
  std::vector<double> sq(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const double d = batch_means[i] - out.mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(nb - 1);
  out.stderr_ = std::sqrt(var / static_cast<double>(nb));
  return out;
}

/// Slope of an ordinary least-squares line y = a + b x.
inline double ls_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("ls_slope: need two samples");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= n; my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("ls_slope: degenerate abscissae");
  return sxy / sxx;
}

/// Theil-Sen slope (median of pairwise slopes); robust against a few outliers.
double theil_sen_slope(std::span<const double> x, std::span<const double> y);

/// Geometric grid of `n` points from a to b inclusive.
inline std::vector<double> geometric_grid(double a, double b, int n) {
  if (!(a > 0) || !(b > a) || n < 2) throw std::invalid_argument("geometric_grid: bad range");
  std::vector<double> t(n);
  const double q = std::log(b / a) / (n - 1);
  for (int i = 0; i < n; ++i) t[i] = a * std::exp(q * i);
  t.front() = a;
  t.back() = b;
  return t;
}

}  // namespace spectrace
