#pragma once

#include <functional>
#include <vector>

namespace spectrace {

struct QuadNodes {
  std::vector<double> x;
  std::vector<double> w;
};

/// Gauss-Legendre nodes/weights on [a, b].
QuadNodes gauss_legendre(int n, double a, double b);

/// Gauss-Hermite nodes/weights for weight exp(-x^2) on the whole line
/// (Golub-Welsch on the Jacobi matrix).
QuadNodes gauss_hermite(int n);

struct QagResult {
  double value = 0.0;
  double abserr = 0.0;
};

/// Adaptive Gauss-Kronrod (GSL QAG) on [a, b].
QagResult integrate_qag(const std::function<double(double)>& f, double a, double b,
                        double epsabs = 0.0, double epsrel = 1e-10);

}  // namespace spectrace
