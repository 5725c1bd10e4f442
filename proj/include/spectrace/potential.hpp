#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spectrace/grid.hpp"

namespace spectrace {

/// Compactly supported real potential sampled on a periodic grid.
/// Instances are immutable after construction: all operations are pure and a
/// Potential may be shared freely across threads.
struct Potential {
  GridSpec grid;
  std::vector<double> values;   // row-major, length N^dim
  double support_radius = 0.0;  // values vanish for |x| > support_radius
  double linf_norm = 0.0;

  /// Exact off-grid description, present for builder potentials and
  /// callback-defined fields. `jumps` lists 1D discontinuity abscissae so ODE
  /// integrators can align steps with them; `piecewise_constant` marks fields
  /// that are exactly constant between consecutive jumps.
  struct Profile {
    std::function<double(const std::array<double, 3>&)> eval;
    std::vector<double> jumps;
    bool piecewise_constant = false;
  };
  std::optional<Profile> profile;

  /// Rebuild the same potential on another grid (used for Richardson checks).
  /// Empty for table-defined fields that cannot be resampled exactly.
  std::function<Potential(const GridSpec&)> regrid;

  double value_at(std::size_t flat) const { return values[flat]; }

  /// Value at an arbitrary point: exact profile when available, otherwise
  /// periodic multilinear interpolation of the grid samples.
  double evaluate(const std::array<double, 3>& x) const;

  /// Grid integral h^n * sum(values).
  double integral() const;

  /// Grid L^p norm; p = infinity is linf_norm.
  double lp_norm(double p) const;

  /// True if the field is even under x -> -x on the grid (all axes).
  bool grid_symmetric() const;
};

Potential make_well(const GridSpec& grid, double depth, double half_width_a);
Potential make_bump(const GridSpec& grid, double amplitude, double radius);
Potential make_delta_box(const GridSpec& grid, double weight, double width);
Potential make_custom(const GridSpec& grid, std::vector<double> values, double support_radius);
Potential make_custom(const GridSpec& grid,
                      std::function<double(const std::array<double, 3>&)> eval,
                      double support_radius);

/// Dispatcher used by the CLI: kind in {well, bump, delta_approx, custom}.
/// well: depth, a; bump: amplitude, a; delta_approx: c, eps.
Potential make_potential(const std::string& kind, const std::map<std::string, double>& params,
                         const GridSpec& grid);

void write_potential(const std::string& path, const Potential& p);
Potential read_potential(const std::string& path);

}  // namespace spectrace
