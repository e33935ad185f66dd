#include "stochtr/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stochtr {

const std::vector<double>& FlowMap::at(int step) const {
  const auto it = std::find(stored_steps.begin(), stored_steps.end(), step);
  if (it == stored_steps.end()) throw GridMismatch("flow step " + std::to_string(step) + " not stored");
  return positions[static_cast<std::size_t>(it - stored_steps.begin())];
}

const GridFunction& TransportSample::at(int step) const {
  const auto it = std::find(steps.begin(), steps.end(), step);
  if (it == steps.end()) throw GridMismatch("transport step " + std::to_string(step) + " not stored");
  return values[static_cast<std::size_t>(it - steps.begin())];
}

bool euler_step(const VectorField& drift, double t, double dt, const Point& increment,
                std::span<double> positions, int dim, double outer) {
  bool left = false;
  if (dim == 1) {
    const double db = increment[0];
    if (const FieldTable* table = drift.table()) {
      for (double& x : positions) {
        x += table->lerp1(x) * dt + db;
        left |= std::abs(x) > outer;
      }
    } else {
      for (double& x : positions) {
        x += drift.eval1(t, x) * dt + db;
        left |= std::abs(x) > outer;
      }
    }
    return left;
  }
  const std::size_t n = positions.size() / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const Point x{positions[2 * i], positions[2 * i + 1]};
    const Point b = drift(t, x);
    for (int a = 0; a < 2; ++a) {
      double& p = positions[2 * i + a];
      p += b[a] * dt + increment[a];
      left |= std::abs(p) > outer;
    }
  }
  return left;
}

FlowMap solve_forward(const VectorField& drift, const BrownianPath& path, const Grid& lattice,
                      const FlowOptions& options) {
  const int dim = lattice.dim();
  if (drift.dim() != dim || path.dim() != dim)
    throw GridMismatch("drift, path and lattice dimensions differ");
  const TimeGrid time = path.time();
  FlowMap flow;
  flow.lattice = lattice;
  flow.time = time;
  flow.drift_id = drift.id();
  if (options.store_steps.empty()) {
    flow.stored_steps.resize(time.steps + 1);
    std::iota(flow.stored_steps.begin(), flow.stored_steps.end(), 0);
  } else {
    flow.stored_steps = options.store_steps;
    std::sort(flow.stored_steps.begin(), flow.stored_steps.end());
    flow.stored_steps.erase(std::unique(flow.stored_steps.begin(), flow.stored_steps.end()),
                            flow.stored_steps.end());
    if (flow.stored_steps.front() < 0 || flow.stored_steps.back() > time.steps)
      throw GridMismatch("requested flow step outside the time grid");
  }
  const double outer = options.outer_half_width > 0.0 ? options.outer_half_width : lattice.half_width();

  std::vector<double> x(lattice.size() * dim);
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    const Point p = lattice.node(i);
    for (int a = 0; a < dim; ++a) x[i * dim + a] = p[a];
  }
  std::size_t next = 0;
  auto store = [&](int k) {
    if (next < flow.stored_steps.size() && flow.stored_steps[next] == k) {
      flow.positions.push_back(x);
      ++next;
    }
  };
  store(0);
  const double dt = time.dt();
  for (int k = 0; k < time.steps; ++k) {
    const Point db{path.increment(k, 0), dim == 2 ? path.increment(k, 1) : 0.0};
    flow.clipped |= euler_step(drift, time.time(k), dt, db, x, dim, outer);
    store(k + 1);
  }
  return flow;
}

namespace {

void invert_1d(const Grid& lattice, std::span<const double> X, const Grid& eval,
               std::span<double> out) {
  const int n = lattice.nodes_per_axis();
  const double tol = 1e-12 * lattice.half_width();
  for (int i = 0; i + 1 < n; ++i) {
    if (X[i + 1] < X[i] - tol)
      throw NonInvertibleFlow("flow is not monotone between lattice nodes " + std::to_string(i) +
                              " and " + std::to_string(i + 1));
  }
  const int m = eval.nodes_per_axis();
  int seg = 0;
  for (int j = 0; j < m; ++j) {
    const double x = eval.coord(j);
    if (x <= X[0]) {
      out[j] = lattice.coord(0) + (x - X[0]);
      continue;
    }
    if (x >= X[n - 1]) {
      out[j] = lattice.coord(n - 1) + (x - X[n - 1]);
      continue;
    }
    while (seg + 1 < n - 1 && X[seg + 1] < x) ++seg;
    // X[seg] < x <= X[seg + 1]
    const double gap = X[seg + 1] - X[seg];
    const double w = gap > 0.0 ? (x - X[seg]) / gap : 0.0;
    out[j] = lattice.coord(seg) + w * lattice.spacing();
  }
}

void invert_2d(const Grid& lattice, std::span<const double> X, const Grid& eval,
               std::span<double> out) {
  const int n = lattice.nodes_per_axis();
  const double h = lattice.spacing();
  const double area_tol = 1e-12 * h * h;
  const std::size_t m_total = eval.size();
  std::vector<char> assigned(m_total, 0);
  const int m = eval.nodes_per_axis();
  const double eh = eval.spacing();
  const double e0 = -eval.half_width();

  auto pos = [&](int i, int j) { return Point{X[2 * lattice.flat(i, j)], X[2 * lattice.flat(i, j) + 1]}; };
  auto start = [&](int i, int j) { return Point{lattice.coord(i), lattice.coord(j)}; };

  auto rasterise = [&](const std::array<std::pair<int, int>, 3>& tri) {
    const Point p0 = pos(tri[0].first, tri[0].second);
    const Point p1 = pos(tri[1].first, tri[1].second);
    const Point p2 = pos(tri[2].first, tri[2].second);
    const double area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    if (area < -area_tol) throw NonInvertibleFlow("deformed lattice triangle is inverted");
    if (area <= area_tol) return;
    const double xmin = std::min({p0[0], p1[0], p2[0]}), xmax = std::max({p0[0], p1[0], p2[0]});
    const double ymin = std::min({p0[1], p1[1], p2[1]}), ymax = std::max({p0[1], p1[1], p2[1]});
    const int i0 = std::max(0, static_cast<int>(std::ceil((xmin - e0) / eh - 1e-9)));
    const int i1 = std::min(m - 1, static_cast<int>(std::floor((xmax - e0) / eh + 1e-9)));
    const int j0 = std::max(0, static_cast<int>(std::ceil((ymin - e0) / eh - 1e-9)));
    const int j1 = std::min(m - 1, static_cast<int>(std::floor((ymax - e0) / eh + 1e-9)));
    const Point s0 = start(tri[0].first, tri[0].second);
    const Point s1 = start(tri[1].first, tri[1].second);
    const Point s2 = start(tri[2].first, tri[2].second);
    const double bary_tol = 1e-10;
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const std::size_t f = eval.flat(i, j);
        if (assigned[f]) continue;
        const double x = eval.coord(i), y = eval.coord(j);
        const double l1 = ((x - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (y - p0[1])) / area;
        const double l2 = ((p1[0] - p0[0]) * (y - p0[1]) - (x - p0[0]) * (p1[1] - p0[1])) / area;
        const double l0 = 1.0 - l1 - l2;
        if (l0 < -bary_tol || l1 < -bary_tol || l2 < -bary_tol) continue;
        out[2 * f] = l0 * s0[0] + l1 * s1[0] + l2 * s2[0];
        out[2 * f + 1] = l0 * s0[1] + l1 * s1[1] + l2 * s2[1];
        assigned[f] = 1;
      }
    }
  };

  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      rasterise({{{i, j}, {i + 1, j}, {i + 1, j + 1}}});
      rasterise({{{i, j}, {i + 1, j + 1}, {i, j + 1}}});
    }
  }

  // Uncovered nodes: translate by the displacement of the nearest edge point.
  std::vector<std::pair<int, int>> edge;
  for (int i = 0; i < n; ++i) {
    edge.push_back({i, 0});
    edge.push_back({i, n - 1});
  }
  for (int j = 1; j + 1 < n; ++j) {
    edge.push_back({0, j});
    edge.push_back({n - 1, j});
  }
  for (std::size_t f = 0; f < m_total; ++f) {
    if (assigned[f]) continue;
    const Point x = eval.node(f);
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> arg{0, 0};
    for (const auto& e : edge) {
      const Point p = pos(e.first, e.second);
      const double d = (p[0] - x[0]) * (p[0] - x[0]) + (p[1] - x[1]) * (p[1] - x[1]);
      if (d < best) {
        best = d;
        arg = e;
      }
    }
    const Point p = pos(arg.first, arg.second);
    const Point s = start(arg.first, arg.second);
    out[2 * f] = x[0] - (p[0] - s[0]);
    out[2 * f + 1] = x[1] - (p[1] - s[1]);
  }
}

}  // namespace

void invert_positions(const Grid& lattice, std::span<const double> positions, const Grid& eval,
                      std::span<double> preimages) {
  if (lattice.dim() != eval.dim()) throw GridMismatch("lattice and evaluation grid dimensions differ");
  const int dim = lattice.dim();
  if (positions.size() != lattice.size() * dim || preimages.size() != eval.size() * dim)
    throw GridMismatch("position or preimage buffer has the wrong size");
  if (dim == 1)
    invert_1d(lattice, positions, eval, preimages);
  else
    invert_2d(lattice, positions, eval, preimages);
}

InverseMap invert_flow(const FlowMap& flow, int step, const Grid& eval) {
  InverseMap inv;
  inv.grid = eval;
  inv.step = step;
  inv.preimages.resize(eval.size() * eval.dim());
  invert_positions(flow.lattice, flow.at(step), eval, inv.preimages);
  return inv;
}

TransportSample transport_solution(const ScalarField& initial, const FlowMap& flow,
                                   const Grid& eval) {
  if (initial.dim() != eval.dim()) throw GridMismatch("initial data and grid dimensions differ");
  const int dim = eval.dim();
  TransportSample out;
  out.grid = eval;
  out.time = flow.time;
  out.steps = flow.stored_steps;
  out.bound = initial.sup_bound();
  std::vector<double> pre(eval.size() * dim);
  for (std::size_t s = 0; s < flow.stored_steps.size(); ++s) {
    invert_positions(flow.lattice, flow.positions[s], eval, pre);
    GridFunction u(eval.size());
    for (std::size_t i = 0; i < eval.size(); ++i)
      u[i] = dim == 1 ? initial.eval1(pre[i]) : initial(Point{pre[2 * i], pre[2 * i + 1]});
    out.values.push_back(std::move(u));
  }
  return out;
}

TransportSample deterministic_solve(const VectorField& drift, const ScalarField& initial,
                                    const Grid& lattice, TimeGrid time, const Grid& eval,
                                    std::vector<int> store_steps) {
  const BrownianPath still = zero_path(time.steps, time.horizon, lattice.dim());
  FlowOptions opts;
  opts.store_steps = std::move(store_steps);
  const FlowMap flow = solve_forward(drift, still, lattice, opts);
  return transport_solution(initial, flow, eval);
}

}  // namespace stochtr
