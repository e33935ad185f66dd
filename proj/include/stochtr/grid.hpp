#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "stochtr/errors.hpp"

namespace stochtr {

/// A point of R^d for d in {1, 2}. In d = 1 only the first coordinate is used.
using Point = std::array<double, 2>;

using GridFunction = std::vector<double>;

inline double norm_sq(const Point& p, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += p[a] * p[a];
  return s;
}

/// Uniform node-centred grid on the box [-L, L]^d with `cells` cells per axis.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, double half_width, int cells);

  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  int cells() const { return cells_; }
  int nodes_per_axis() const { return cells_ + 1; }
  double spacing() const { return spacing_; }
  std::size_t size() const;
  double cell_volume() const { return std::pow(spacing_, dim_); }

  double coord(int i) const { return -half_width_ + i * spacing_; }
  std::size_t flat(int i, int j = 0) const {
    return static_cast<std::size_t>(j) * nodes_per_axis() + i;
  }
  Point node(std::size_t flat_index) const;

  /// Trapezoid quadrature of a grid function over the whole box.
  double integrate(std::span<const double> values) const;
  /// Trapezoid quadrature restricted to nodes with max-norm coordinate <= radius.
  double integrate_within(std::span<const double> values, double radius) const;

  /// Sum over cell edges of squared forward differences times the cell volume,
  /// i.e. the discrete Dirichlet energy int |grad v|^2.
  double dirichlet_energy(std::span<const double> values) const;

  bool operator==(const Grid& o) const {
    return dim_ == o.dim_ && cells_ == o.cells_ && half_width_ == o.half_width_;
  }

 private:
  int dim_ = 1;
  double half_width_ = 1.0;
  int cells_ = 1;
  double spacing_ = 2.0;
};

/// Uniform time grid 0 = t_0 < ... < t_K = T.
struct TimeGrid {
  double horizon = 1.0;
  int steps = 1;

  double dt() const { return horizon / steps; }
  double time(int k) const { return horizon * k / steps; }
  bool operator==(const TimeGrid&) const = default;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw GridMismatch(std::string("grid mismatch: ") + what);
}

inline void require_same_time(const TimeGrid& a, const TimeGrid& b, const char* what) {
  if (!(a == b)) throw GridMismatch(std::string("time grid mismatch: ") + what);
}

}  // namespace stochtr
