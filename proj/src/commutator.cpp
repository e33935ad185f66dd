#include "stochtr/commutator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stochtr/parallel.hpp"

namespace stochtr {

namespace {

struct Taps {
  int reach = 0;  // offsets -reach..reach per axis
  std::vector<double> weights;
};

Taps make_taps(const Mollifier& rho, double h, int dim) {
  Taps t;
  t.reach = static_cast<int>(std::floor(rho.support_radius() / h + 1e-12));
  const int w = 2 * t.reach + 1;
  t.weights.assign(dim == 1 ? w : w * w, 0.0);
  double sum = 0.0;
  for (int j = 0; j < (dim == 1 ? 1 : w); ++j) {
    for (int i = 0; i < w; ++i) {
      const Point y{(i - t.reach) * h, dim == 1 ? 0.0 : (j - t.reach) * h};
      const double v = rho(y);
      t.weights[j * w + i] = v;
      sum += v;
    }
  }
  for (double& v : t.weights) v /= sum;
  return t;
}

}  // namespace

CommutatorField compute_commutator(const VectorField& f, const ScalarField& g, const Mollifier& rho,
                                   const Grid& grid) {
  return compute_commutator(f, g, rho, rho, grid);
}

CommutatorField compute_commutator(const VectorField& f, const ScalarField& g, const Mollifier& rho,
                                   const Mollifier& inner, const Grid& grid) {
  const int dim = grid.dim();
  if (f.dim() != dim || g.dim() != dim || rho.dim() != dim || inner.dim() != dim)
    throw GridMismatch("commutator inputs have different dimensions");
  const double h = grid.spacing();
  if (std::min(rho.width(), inner.width()) < 4.0 * h)
    throw UnresolvedMollifier("mollifier width " + std::to_string(rho.width()) +
                              " is below four grid spacings (" + std::to_string(4.0 * h) + ")");

  ScalarField smooth = g;
  if (!g.has_gradient()) smooth = mollify_initial(g, Mollifier(rho.kind(), rho.width() / 8.0, dim));

  const std::size_t n = grid.size();
  std::vector<double> grad(n * dim), f_vals(n * dim), flux(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point x = grid.node(i);
    const Point gv = smooth.gradient(x);
    const Point fv = f(0.0, x);
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      grad[a * n + i] = gv[a];
      f_vals[a * n + i] = fv[a];
      s += fv[a] * gv[a];
    }
    flux[i] = s;
  }

  const Taps taps = make_taps(rho, h, dim);
  const Taps taps_inner = make_taps(inner, h, dim);
  const int m = grid.nodes_per_axis();
  const int r = std::max(taps.reach, taps_inner.reach);
  CommutatorField out;
  out.grid = grid;
  out.width = rho.width();
  out.values.assign(n, 0.0);
  out.valid.assign(n, 0);

  for (std::size_t idx = 0; idx < n; ++idx) {
    const int i = static_cast<int>(idx % m), j = static_cast<int>(idx / m);
    if (i < r || i >= m - r) continue;
    if (dim == 2 && (j < r || j >= m - r)) continue;
    double smoothed_grad[2] = {0.0, 0.0};
    double smoothed_flux = 0.0;
    // rho * v (x) = sum_y rho(y) v(x - y)
    auto convolve = [&](const Taps& t, auto&& use) {
      const int tr = t.reach, tw = 2 * t.reach + 1;
      for (int q = 0; q < (dim == 1 ? 1 : tw); ++q) {
        for (int p = 0; p < tw; ++p) {
          const double wt = t.weights[q * tw + p];
          if (wt == 0.0) continue;
          use(wt, grid.flat(i - (p - tr), dim == 1 ? 0 : j - (q - tr)));
        }
      }
    };
    convolve(taps, [&](double wt, std::size_t src) {
      for (int a = 0; a < dim; ++a) smoothed_grad[a] += wt * grad[a * n + src];
    });
    convolve(taps_inner, [&](double wt, std::size_t src) { smoothed_flux += wt * flux[src]; });
    double lead = 0.0;
    for (int a = 0; a < dim; ++a) lead += f_vals[a * n + idx] * smoothed_grad[a];
    out.values[idx] = lead - smoothed_flux;
    out.valid[idx] = 1;
  }
  return out;
}

double l1loc_norm(const CommutatorField& r, double radius) {
  const Grid& grid = r.grid;
  GridFunction a(r.values.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Point x = grid.node(i);
    bool inside = true;
    for (int d = 0; d < grid.dim(); ++d) inside &= std::abs(x[d]) <= radius + 1e-12;
    if (inside && !r.valid[i]) throw GridMismatch("compact set reaches nodes without a commutator value");
    a[i] = std::abs(r.values[i]);
  }
  return grid.integrate_within(a, radius);
}

CommutatorTable convergence_study(const CommutatorStudy& s) {
  if (s.ladder.empty()) throw ConfigError("empty width ladder");
  for (std::size_t i = 1; i < s.ladder.size(); ++i)
    if (!(s.ladder[i] < s.ladder[i - 1])) throw ConfigError("width ladder must be strictly decreasing");
  const double L = s.f.half_width();
  if (!(s.radius > 0.0 && s.radius < L - s.ladder.front()))
    throw ConfigError("compact set must lie strictly inside the box minus the largest width");
  const int dim = s.f.dim();
  const double spacing = s.spacing > 0.0 ? s.spacing : s.ladder.back() / 8.0;
  const Grid grid(dim, L, static_cast<int>(std::ceil(2.0 * L / spacing)));

  const std::size_t rungs = s.ladder.size();
  using Rows = std::vector<CommutatorRow>;
  const Rows rows = block_reduce<Rows>(
      rungs, 1, [&] { return Rows{}; },
      [&](std::size_t begin, std::size_t end, Rows& acc) {
        for (std::size_t i = begin; i < end; ++i) {
          const Mollifier rho(s.kind, s.ladder[i], dim);
          acc.push_back({s.ladder[i], l1loc_norm(compute_commutator(s.f, s.g, rho, grid), s.radius)});
        }
      },
      [](Rows& a, const Rows& b) { a.insert(a.end(), b.begin(), b.end()); });

  CommutatorTable t;
  t.rows = rows;
  t.finite = std::all_of(rows.begin(), rows.end(), [](const CommutatorRow& r) { return std::isfinite(r.norm); });
  const double first = rows.front().norm;
  t.last_over_first = first > 0.0 ? rows.back().norm / first : 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double ratio = rows[i - 1].norm > 0.0 ? rows[i].norm / rows[i - 1].norm : 0.0;
    t.max_successive_ratio = std::max(t.max_successive_ratio, ratio);
  }
  return t;
}

}  // namespace stochtr
