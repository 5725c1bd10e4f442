#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>

#include "spectrace/util.hpp"

namespace spectrace {

/// Uniform periodic grid on the torus [-L, L)^n. Points are x_i = -L + i h
/// with h = 2L/N; dual frequencies are xi_k = pi k / L for k in [-N/2, N/2).
struct GridSpec {
  int dim = 1;
  double half_width = 0.0;   // L
  int points_per_axis = 0;   // N, even

  double spacing() const { return 2.0 * half_width / points_per_axis; }

  std::size_t size() const {
    std::size_t s = 1;
    for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(points_per_axis);
    return s;
  }

  double coord(int i) const { return -half_width + i * spacing(); }

  /// Signed frequency for raw index k in [0, N).
  double freq(int k) const {
    const int s = (k < points_per_axis / 2) ? k : k - points_per_axis;
    return kPi * s / half_width;
  }

  int signed_index(int k) const {
    return (k < points_per_axis / 2) ? k : k - points_per_axis;
  }

  /// Decompose a row-major flat index into per-axis indices (axis 0 slowest).
  std::array<int, 3> unflatten(std::size_t flat) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int d = dim - 1; d >= 0; --d) {
      idx[d] = static_cast<int>(flat % points_per_axis);
      flat /= points_per_axis;
    }
    return idx;
  }

  std::size_t flatten(const std::array<int, 3>& idx) const {
    std::size_t f = 0;
    for (int d = 0; d < dim; ++d)
      f = f * points_per_axis + static_cast<std::size_t>(idx[d]);
    return f;
  }

  /// Grid point coordinates for a flat index; unused axes are zero.
  std::array<double, 3> point(std::size_t flat) const {
    const auto idx = unflatten(flat);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int d = 0; d < dim; ++d) x[d] = coord(idx[d]);
    return x;
  }

  void validate() const {
    if (dim < 1 || dim > 3) throw std::invalid_argument("GridSpec: dim must be 1, 2 or 3");
    if (!(half_width > 0) || !std::isfinite(half_width))
      throw std::invalid_argument("GridSpec: half_width must be positive and finite");
    if (points_per_axis < 16 || points_per_axis % 2 != 0)
      throw std::invalid_argument("GridSpec: N must be even and >= 16");
  }

  bool operator==(const GridSpec&) const = default;
};

}  // namespace spectrace
