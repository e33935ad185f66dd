#include "stochtr/grid.hpp"

#include <string>

namespace stochtr {

Grid::Grid(int dim, double half_width, int cells)
    : dim_(dim), half_width_(half_width), cells_(cells) {
  if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
  if (!(half_width > 0.0)) throw ConfigError("grid half width must be positive");
  if (cells < 2) throw ConfigError("grid needs at least 2 cells");
  spacing_ = 2.0 * half_width / cells;
}

std::size_t Grid::size() const {
  std::size_t n = static_cast<std::size_t>(nodes_per_axis());
  return dim_ == 1 ? n : n * n;
}

Point Grid::node(std::size_t flat_index) const {
  const auto n = static_cast<std::size_t>(nodes_per_axis());
  Point p{coord(static_cast<int>(flat_index % n)), 0.0};
  if (dim_ == 2) p[1] = coord(static_cast<int>(flat_index / n));
  return p;
}

double Grid::integrate(std::span<const double> values) const {
  return integrate_within(values, half_width_ * 2.0);
}

double Grid::integrate_within(std::span<const double> values, double radius) const {
  if (values.size() != size()) throw GridMismatch("grid function has wrong length");
  const int n = nodes_per_axis();
  // Nodes on the restriction boundary get the half weight as well.
  auto weight = [&](int i) {
    const double x = coord(i);
    if (std::abs(x) > radius + 1e-12 * half_width_) return 0.0;
    const bool edge = i == 0 || i == n - 1 || std::abs(std::abs(x) - radius) < 1e-9 * spacing_;
    return edge ? 0.5 : 1.0;
  };
  double sum = 0.0;
  if (dim_ == 1) {
    for (int i = 0; i < n; ++i) sum += weight(i) * values[i];
  } else {
    for (int j = 0; j < n; ++j) {
      const double wj = weight(j);
      if (wj == 0.0) continue;
      for (int i = 0; i < n; ++i) sum += wj * weight(i) * values[flat(i, j)];
    }
  }
  return sum * cell_volume();
}

double Grid::dirichlet_energy(std::span<const double> values) const {
  if (values.size() != size()) throw GridMismatch("grid function has wrong length");
  const int n = nodes_per_axis();
  const double inv_h = 1.0 / spacing_;
  double sum = 0.0;
  if (dim_ == 1) {
    for (int i = 0; i + 1 < n; ++i) {
      const double d = (values[i + 1] - values[i]) * inv_h;
      sum += d * d;
    }
  } else {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        if (i + 1 < n) {
          const double d = (values[flat(i + 1, j)] - values[flat(i, j)]) * inv_h;
          sum += d * d;
        }
        if (j + 1 < n) {
          const double d = (values[flat(i, j + 1)] - values[flat(i, j)]) * inv_h;
          sum += d * d;
        }
      }
    }
  }
  return sum * cell_volume();
}

}  // namespace stochtr
