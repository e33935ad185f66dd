#include "stochtr/expectation.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "stochtr/parallel.hpp"

namespace stochtr {

namespace {
constexpr int kCellOrder = 6;
}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::MonteCarlo: return "monte-carlo";
    case Provenance::ParabolicSolver: return "parabolic-solver";
    case Provenance::ClosedForm: return "closed-form";
  }
  return "unknown";
}

std::size_t MeanField::index_of(int step) const {
  const auto it = std::find(steps.begin(), steps.end(), step);
  if (it == steps.end()) throw GridMismatch("mean field has no step " + std::to_string(step));
  return static_cast<std::size_t>(it - steps.begin());
}

double MeanField::sup_abs(int step) const {
  double m = 0.0;
  for (double v : at(step)) m = std::max(m, std::abs(v));
  return m;
}

double MeanField::max_error(int step) const {
  double m = 0.0;
  for (double v : error_at(step)) m = std::max(m, v);
  return m;
}

std::vector<int> default_snapshots(int steps) {
  std::vector<int> s{steps / 4, steps / 2, steps};
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

std::vector<MeanField> estimate_V(const VectorField& drift, const ScalarField& initial,
                                  const std::vector<ControlFunction>& controls, const Grid& eval,
                                  std::size_t paths, std::uint64_t seed,
                                  const EstimateOptions& options) {
  if (paths < 100)
    throw InsufficientSamples("at least 100 paths are required, got " + std::to_string(paths));
  if (controls.empty()) throw GridMismatch("no controls given");
  const int dim = eval.dim();
  if (drift.dim() != dim || initial.dim() != dim) throw GridMismatch("field and grid dimensions differ");
  const TimeGrid time = controls.front().time();
  for (const auto& h : controls) {
    require_same_time(h.time(), time, "control");
    if (h.dim() != dim) throw GridMismatch("control dimension differs from grid");
  }
  const Grid lattice = options.lattice.value_or(eval);
  if (lattice.dim() != dim) throw GridMismatch("lattice dimension differs from grid");

  std::vector<int> steps = options.store_steps.empty() ? default_snapshots(time.steps) : options.store_steps;
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  if (steps.front() < 0 || steps.back() > time.steps) throw GridMismatch("snapshot outside the time grid");

  const std::size_t nc = controls.size(), ns = steps.size(), ne = eval.size();
  const std::size_t field_slots = nc * ns * ne;
  const std::size_t slots = field_slots + nc * ns;
  const double outer = lattice.half_width();
  const double dt = time.dt();

  auto body = [&](std::size_t begin, std::size_t end, MomentAccumulator& acc) {
    std::vector<double> x(lattice.size() * dim), pre(ne * dim), u(ne);
    std::vector<double> logf(nc), terminal_logf(nc);
    for (std::size_t m = begin; m < end; ++m) {
      const BrownianPath path = sample_path(path_seed(seed, m), time.steps, time.horizon, dim);
      for (std::size_t i = 0; i < lattice.size(); ++i) {
        const Point p = lattice.node(i);
        for (int a = 0; a < dim; ++a) x[i * dim + a] = p[a];
      }
      if (options.weight == WeightMode::Terminal) {
        for (std::size_t c = 0; c < nc; ++c) terminal_logf[c] = std::log(exponential_of(controls[c], path).terminal());
      }
      std::fill(logf.begin(), logf.end(), 0.0);
      std::size_t next = 0;
      for (int k = 0; k <= time.steps && next < ns; ++k) {
        if (steps[next] == k) {
          invert_positions(lattice, x, eval, pre);
          for (std::size_t i = 0; i < ne; ++i)
            u[i] = dim == 1 ? initial.eval1(pre[i]) : initial(Point{pre[2 * i], pre[2 * i + 1]});
          for (std::size_t c = 0; c < nc; ++c) {
            const double w = std::exp(options.weight == WeightMode::Terminal ? terminal_logf[c] : logf[c]);
            const std::size_t base = (c * ns + next) * ne;
            for (std::size_t i = 0; i < ne; ++i) acc.add(base + i, u[i] * w);
            acc.add(field_slots + c * ns + next, w);
          }
          ++next;
        }
        if (k == time.steps || next >= ns) break;
        const Point db{path.increment(k, 0), dim == 2 ? path.increment(k, 1) : 0.0};
        for (std::size_t c = 0; c < nc; ++c) {
          double s = 0.0, q = 0.0;
          for (int a = 0; a < dim; ++a) {
            const double hv = controls[c].value(k, a);
            s += hv * db[a];
            q += hv * hv;
          }
          logf[c] += s - 0.5 * q * dt;
        }
        euler_step(drift, time.time(k), dt, db, x, dim, outer);
      }
      acc.count_sample();
    }
  };
  const MomentAccumulator total = block_reduce<MomentAccumulator>(
      paths, options.block_size, [&] { return MomentAccumulator(slots); }, body,
      [](MomentAccumulator& a, const MomentAccumulator& b) { a.merge(b); });

  std::vector<MeanField> out;
  for (std::size_t c = 0; c < nc; ++c) {
    MeanField mf;
    mf.grid = eval;
    mf.time = time;
    mf.steps = steps;
    mf.paths = paths;
    mf.provenance = Provenance::MonteCarlo;
    mf.label = controls[c].label();
    for (std::size_t s = 0; s < ns; ++s) {
      GridFunction v(ne), e(ne);
      const std::size_t base = (c * ns + s) * ne;
      for (std::size_t i = 0; i < ne; ++i) {
        const Estimate est = total.estimate(base + i);
        v[i] = est.mean;
        e[i] = est.std_error;
      }
      mf.values.push_back(std::move(v));
      mf.std_errors.push_back(std::move(e));
      mf.weight_means.push_back(total.estimate(field_slots + c * ns + s));
    }
    out.push_back(std::move(mf));
  }
  return out;
}

MeanField estimate_V(const VectorField& drift, const ScalarField& initial, const ControlFunction& h,
                     const Grid& eval, std::size_t paths, std::uint64_t seed,
                     const EstimateOptions& options) {
  return estimate_V(drift, initial, std::vector<ControlFunction>{h}, eval, paths, seed, options).front();
}

namespace {

// psi(s) = exp(1 - 1/(1 - s^2)) and its first two derivatives in s.
struct BumpJet {
  double v = 0.0, d1 = 0.0, d2 = 0.0;
};

BumpJet bump_jet(double s) {
  const double q = 1.0 - s * s;
  if (q <= 0.0) return {};
  const double v = std::exp(1.0 - 1.0 / q);
  const double g1 = -2.0 * s / (q * q);
  const double g2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
  return {v, g1 * v, (g2 + g1 * g1) * v};
}

}  // namespace

TestFunction::TestFunction(Point center, double radius, int dim, double amplitude)
    : center_(center), radius_(radius), dim_(dim), amplitude_(amplitude) {
  if (!(radius > 0.0)) throw InvalidTestFunction("test function radius must be positive");
  if (dim != 1 && dim != 2) throw InvalidTestFunction("test functions exist for d = 1, 2 only");
}

double TestFunction::value(const Point& x) const {
  double v = amplitude_;
  for (int a = 0; a < dim_; ++a) v *= bump_jet((x[a] - center_[a]) / radius_).v;
  return v;
}

Point TestFunction::gradient(const Point& x) const {
  Point g{0.0, 0.0};
  BumpJet j[2];
  for (int a = 0; a < dim_; ++a) j[a] = bump_jet((x[a] - center_[a]) / radius_);
  for (int a = 0; a < dim_; ++a) {
    double v = amplitude_ * j[a].d1 / radius_;
    for (int b = 0; b < dim_; ++b)
      if (b != a) v *= j[b].v;
    g[a] = v;
  }
  return g;
}

double TestFunction::laplacian(const Point& x) const {
  BumpJet j[2];
  for (int a = 0; a < dim_; ++a) j[a] = bump_jet((x[a] - center_[a]) / radius_);
  double sum = 0.0;
  for (int a = 0; a < dim_; ++a) {
    double v = j[a].d2 / (radius_ * radius_);
    for (int b = 0; b < dim_; ++b)
      if (b != a) v *= j[b].v;
    sum += v;
  }
  return amplitude_ * sum;
}

void TestFunction::require_inside(double half_width) const {
  for (int a = 0; a < dim_; ++a) {
    if (std::abs(center_[a]) + radius_ >= half_width)
      throw InvalidTestFunction("test function support leaves the box");
  }
}

std::vector<TestFunction> probe_functions(int dim) {
  const std::vector<std::pair<double, double>> spots{
      {-0.8, 0.5}, {-0.3, 0.4}, {0.0, 0.6}, {0.4, 0.3}, {0.9, 0.5}};
  std::vector<TestFunction> out;
  for (std::size_t i = 0; i < spots.size(); ++i) {
    const auto [c, r] = spots[i];
    const Point center = dim == 1 ? Point{c, 0.0} : Point{c, spots[(i + 2) % spots.size()].first};
    out.emplace_back(center, r, dim);
  }
  return out;
}

GridFunction hat_moments(const Grid& grid, const std::function<double(const Point&)>& fn) {
  using GL = boost::math::quadrature::gauss<double, kCellOrder>;
  // Full node list on [-1, 1] from the half-rule Boost stores.
  static const auto rule = [] {
    std::vector<std::pair<double, double>> r;
    const auto& a = GL::abscissa();
    const auto& w = GL::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
      r.push_back({0.5 * (1.0 + a[i]), 0.5 * w[i]});
      if (a[i] != 0.0) r.push_back({0.5 * (1.0 - a[i]), 0.5 * w[i]});
    }
    return r;
  }();
  const int n = grid.nodes_per_axis();
  const double h = grid.spacing();
  GridFunction out(grid.size(), 0.0);
  if (grid.dim() == 1) {
    for (int i = 0; i + 1 < n; ++i) {
      for (const auto& [th, w] : rule) {
        const double f = w * h * fn({grid.coord(i) + th * h, 0.0});
        out[i] += (1.0 - th) * f;
        out[i + 1] += th * f;
      }
    }
    return out;
  }
  for (int j = 0; j + 1 < n; ++j)
    for (int i = 0; i + 1 < n; ++i)
      for (const auto& [ty, wy] : rule)
        for (const auto& [tx, wx] : rule) {
          const double f = wx * wy * h * h * fn({grid.coord(i) + tx * h, grid.coord(j) + ty * h});
          out[grid.flat(i, j)] += (1.0 - tx) * (1.0 - ty) * f;
          out[grid.flat(i + 1, j)] += tx * (1.0 - ty) * f;
          out[grid.flat(i, j + 1)] += (1.0 - tx) * ty * f;
          out[grid.flat(i + 1, j + 1)] += tx * ty * f;
        }
  return out;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

GridFunction drift_moments(const Grid& grid, const VectorField& drift, const TestFunction& phi, double t) {
  const int dim = grid.dim();
  return hat_moments(grid, [&](const Point& x) {
    const double v = phi.value(x);
    const Point g = phi.gradient(x);
    if (v == 0.0 && g[0] == 0.0 && g[1] == 0.0) return 0.0;
    const Point b = drift(t, x);
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += b[a] * g[a];
    return s + v * drift.divergence_at(t, x);
  });
}

}  // namespace

double weak_pairing(const Grid& grid, std::span<const double> values, const TestFunction& phi) {
  if (phi.dim() != grid.dim()) throw InvalidTestFunction("test function dimension differs from grid");
  phi.require_inside(grid.half_width());
  if (values.size() != grid.size()) throw GridMismatch("values do not match grid");
  return dot(values, hat_moments(grid, [&](const Point& x) { return phi.value(x); }));
}

std::vector<double> weak_pairing(const TransportSample& sample, const TestFunction& phi) {
  phi.require_inside(sample.grid.half_width());
  const GridFunction w = hat_moments(sample.grid, [&](const Point& x) { return phi.value(x); });
  std::vector<double> out;
  for (const auto& u : sample.values) out.push_back(dot(u, w));
  return out;
}

std::vector<double> weak_pairing(const MeanField& field, const TestFunction& phi) {
  phi.require_inside(field.grid.half_width());
  const GridFunction w = hat_moments(field.grid, [&](const Point& x) { return phi.value(x); });
  std::vector<double> out;
  for (const auto& v : field.values) out.push_back(dot(v, w));
  return out;
}

ResidualWeights residual_weights(const Grid& grid, const VectorField& drift, const TestFunction& phi,
                                 const ResidualOptions& options) {
  const int dim = grid.dim();
  if (drift.dim() != dim || phi.dim() != dim) throw GridMismatch("dimension mismatch in weak residual");
  phi.require_inside(grid.half_width());
  ResidualWeights w;
  w.grid = grid;
  w.value = hat_moments(grid, [&](const Point& x) { return phi.value(x); });
  w.half_laplacian = options.drop_laplacian
                         ? GridFunction(grid.size(), 0.0)
                         : hat_moments(grid, [&](const Point& x) { return 0.5 * phi.laplacian(x); });
  for (int a = 0; a < dim; ++a)
    w.gradient[a] = hat_moments(grid, [&](const Point& x) { return phi.gradient(x)[a]; });
  w.drift = drift_moments(grid, drift, phi, 0.0);
  return w;
}

std::vector<double> weak_residual(const TransportSample& sample, const BrownianPath& path,
                                  const ResidualWeights& w) {
  require_same_grid(sample.grid, w.grid, "transport sample and residual weights");
  require_same_time(sample.time, path.time(), "transport sample and path");
  const int K = path.steps();
  if (static_cast<int>(sample.steps.size()) != K + 1)
    throw GridMismatch("weak residual needs the transport sample at every step");
  const int dim = sample.grid.dim();
  if (path.dim() != dim) throw GridMismatch("dimension mismatch in weak residual");

  const double dt = path.dt();
  const double p0 = dot(sample.values[0], w.value);
  std::vector<double> out(K + 1, 0.0);
  double accumulated = 0.0;
  for (int k = 0; k < K; ++k) {
    const GridFunction& u = sample.values[k];
    double step = (dot(u, w.drift) + dot(u, w.half_laplacian)) * dt;
    for (int a = 0; a < dim; ++a) step += dot(u, w.gradient[a]) * path.increment(k, a);
    accumulated += step;
    out[k + 1] = dot(sample.values[k + 1], w.value) - p0 - accumulated;
  }
  return out;
}

std::vector<double> weak_residual(const TransportSample& sample, const BrownianPath& path,
                                  const VectorField& drift, const TestFunction& phi,
                                  const ResidualOptions& options) {
  if (drift.autonomous()) return weak_residual(sample, path, residual_weights(sample.grid, drift, phi, options));
  // Time-dependent drift: rebuild the drift weights on every step.
  ResidualWeights w = residual_weights(sample.grid, drift, phi, options);
  require_same_time(sample.time, path.time(), "transport sample and path");
  const int K = path.steps();
  if (static_cast<int>(sample.steps.size()) != K + 1)
    throw GridMismatch("weak residual needs the transport sample at every step");
  const double dt = path.dt();
  const double p0 = dot(sample.values[0], w.value);
  std::vector<double> out(K + 1, 0.0);
  double accumulated = 0.0;
  for (int k = 0; k < K; ++k) {
    if (k > 0) w.drift = drift_moments(sample.grid, drift, phi, path.time().time(k));
    const GridFunction& u = sample.values[k];
    double step = (dot(u, w.drift) + dot(u, w.half_laplacian)) * dt;
    for (int a = 0; a < sample.grid.dim(); ++a) step += dot(u, w.gradient[a]) * path.increment(k, a);
    accumulated += step;
    out[k + 1] = dot(sample.values[k + 1], w.value) - p0 - accumulated;
  }
  return out;
}

}  // namespace stochtr
