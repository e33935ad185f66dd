#include "stochtr/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

namespace stochtr {

double StabilityLimits::limit() const { return std::min({diffusion_dt, advection_dt, positivity_dt}); }

namespace {

double control_sup(const ControlFunction& h) {
  double m = 0.0;
  for (int k = 0; k < h.time().steps; ++k) {
    double s = 0.0;
    for (int a = 0; a < h.dim(); ++a) s += std::abs(h.value(k, a));
    m = std::max(m, s);
  }
  return m;
}

// Largest sum_a |b_a| over the grid nodes at the given times.
double drift_l1_sup(const VectorField& b, const Grid& grid, const TimeGrid& time) {
  double m = 0.0;
  const int dim = grid.dim();
  const int samples = b.autonomous() ? 1 : time.steps + 1;
  for (int s = 0; s < samples; ++s) {
    const double t = b.autonomous() ? 0.0 : time.time(s);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Point v = b(t, grid.node(i));
      double sum = 0.0;
      for (int a = 0; a < dim; ++a) sum += std::abs(v[a]);
      m = std::max(m, sum);
    }
  }
  return m;
}

void require_problem(const ParabolicProblem& p) {
  const int dim = p.grid.dim();
  if (p.drift.dim() != dim || p.initial.dim() != dim || p.control.dim() != dim)
    throw GridMismatch("parabolic problem dimensions differ");
  if (p.grid.cells() < 2) throw GridMismatch("parabolic grid needs at least two cells");
}

}  // namespace

StabilityLimits stability_limits(const ParabolicProblem& p) {
  require_problem(p);
  const int d = p.grid.dim();
  const double dx = p.grid.spacing();
  StabilityLimits s;
  s.max_speed = drift_l1_sup(p.drift, p.grid, p.control.time()) + control_sup(p.control);
  s.diffusion_dt = 0.9 * dx * dx / (2.0 * d * 0.5);
  s.advection_dt = s.max_speed > 0.0 ? 0.9 * dx / s.max_speed : std::numeric_limits<double>::infinity();
  s.positivity_dt = 1.0 / (s.max_speed / dx + d / (dx * dx));
  return s;
}

int stable_substeps(const ParabolicProblem& p) {
  const double dt = p.control.time().dt();
  return std::max(1, static_cast<int>(std::ceil(dt / stability_limits(p).limit() - 1e-12)));
}

ParabolicSolution solve_parabolic(const ParabolicProblem& p) {
  require_problem(p);
  const Grid& grid = p.grid;
  const TimeGrid time = p.control.time();
  const int dim = grid.dim();
  const int n = grid.nodes_per_axis();
  const std::size_t size = grid.size();
  const double dx = grid.spacing();

  const StabilityLimits limits = stability_limits(p);
  int substeps = p.substeps;
  if (substeps <= 0) {
    substeps = stable_substeps(p);
  } else if (time.dt() / substeps > limits.limit() * (1.0 + 1e-12)) {
    throw UnstableConfig("substep " + std::to_string(time.dt() / substeps) +
                         " exceeds the stability limit " + std::to_string(limits.limit()));
  }
  const double h_dt = time.dt() / substeps;

  std::vector<int> steps = p.store_steps;
  if (steps.empty()) {
    steps.resize(time.steps + 1);
    for (int k = 0; k <= time.steps; ++k) steps[k] = k;
  }
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  if (steps.front() < 0 || steps.back() > time.steps) throw GridMismatch("snapshot outside the time grid");

  GridFunction v = sample(p.initial, grid);
  ParabolicSolution out;
  out.substeps = substeps;
  out.sub_dt = h_dt;
  out.initial_min = *std::min_element(v.begin(), v.end());
  out.initial_max = *std::max_element(v.begin(), v.end());
  out.drift_sup = 0.0;
  const double mp_tol = 1e-12 * std::max(1.0, out.initial_max - out.initial_min);

  std::vector<char> boundary(size, 0);
  for (std::size_t f = 0; f < size; ++f) {
    const int i = static_cast<int>(f % n), j = static_cast<int>(f / n);
    if (i == 0 || i == n - 1 || (dim == 2 && (j == 0 || j == n - 1))) boundary[f] = 1;
  }

  GridFunction drift_vals, div_vals(size, 0.0), source_vals(size, 0.0);
  const bool divergence_known = !p.drift.distributional_divergence();
  auto load_fields = [&](double t) {
    drift_vals = sample(p.drift, t, grid);
    if (divergence_known)
      for (std::size_t f = 0; f < size; ++f) div_vals[f] = p.drift.divergence_at(t, grid.node(f));
    if (p.source)
      for (std::size_t f = 0; f < size; ++f) source_vals[f] = p.source(t, grid.node(f));
  };
  load_fields(0.0);
  {
    double m = 0.0;
    for (std::size_t f = 0; f < size; ++f) {
      double s = 0.0;
      for (int a = 0; a < dim; ++a) s += drift_vals[a * size + f] * drift_vals[a * size + f];
      m = std::max(m, std::sqrt(s));
    }
    out.drift_sup = m;
  }

  auto energy_of = [&](const GridFunction& u) {
    GridFunction sq(size);
    for (std::size_t f = 0; f < size; ++f) sq[f] = u[f] * u[f];
    return sq;
  };
  auto record = [&](const GridFunction& u, double& e, double& g, double& dv) {
    GridFunction sq = energy_of(u);
    e = grid.integrate(sq);
    g = grid.dirichlet_energy(u);
    for (std::size_t f = 0; f < size; ++f) sq[f] *= div_vals[f];
    dv = grid.integrate(sq);
  };

  out.field.grid = grid;
  out.field.time = time;
  out.field.steps = steps;
  out.field.provenance = Provenance::ParabolicSolver;
  out.field.label = p.control.label();
  std::size_t next = 0;
  auto snapshot = [&](int k) {
    if (next < steps.size() && steps[next] == k) {
      out.field.values.push_back(v);
      out.field.std_errors.push_back(GridFunction(size, 0.0));
      ++next;
    }
  };

  double e_prev, g_prev, d_prev;
  record(v, e_prev, g_prev, d_prev);
  out.energy.push_back(e_prev);
  out.gradient_energy.push_back(g_prev);
  out.cumulative_gradient.push_back(0.0);
  out.cumulative_energy.push_back(0.0);
  out.cumulative_divergence.push_back(0.0);
  snapshot(0);

  double cum_g = 0.0, cum_e = 0.0, cum_d = 0.0;
  GridFunction next_v(v);
  const std::size_t stride[2] = {1, static_cast<std::size_t>(n)};
  for (int k = 0; k < time.steps; ++k) {
    Point hk{p.control.value(k, 0), dim == 2 ? p.control.value(k, 1) : 0.0};
    for (int s = 0; s < substeps; ++s) {
      const double t = time.time(k) + s * h_dt;
      if (!p.drift.autonomous() || p.source) load_fields(t);
      for (std::size_t f = 0; f < size; ++f) {
        if (boundary[f]) {
          next_v[f] = v[f];
          continue;
        }
        const double c = v[f];
        double rate = 0.0;
        for (int a = 0; a < dim; ++a) {
          const double lo = v[f - stride[a]], hi = v[f + stride[a]];
          const double speed = drift_vals[a * size + f] + hk[a];
          rate -= speed > 0.0 ? speed * (c - lo) / dx : speed * (hi - c) / dx;
          rate += 0.5 * (hi - 2.0 * c + lo) / (dx * dx);
        }
        next_v[f] = c + h_dt * (rate + source_vals[f]);
      }
      v.swap(next_v);
      if (!p.source) {
        for (double x : v) {
          if (x < out.initial_min - mp_tol || x > out.initial_max + mp_tol) out.max_principle_ok = false;
        }
      }
      double e, g, dv;
      record(v, e, g, dv);
      cum_g += 0.5 * (g + g_prev) * h_dt;
      cum_e += 0.5 * (e + e_prev) * h_dt;
      cum_d += 0.5 * (dv + d_prev) * h_dt;
      e_prev = e;
      g_prev = g;
      d_prev = dv;
    }
    out.energy.push_back(e_prev);
    out.gradient_energy.push_back(g_prev);
    out.cumulative_gradient.push_back(cum_g);
    out.cumulative_energy.push_back(cum_e);
    out.cumulative_divergence.push_back(cum_d);
    snapshot(k + 1);
  }
  return out;
}

EnergyReport energy_report(const ParabolicSolution& s, std::optional<double> growth_rate) {
  EnergyReport r;
  const TimeGrid& time = s.field.time;
  const std::size_t n = s.energy.size();
  for (std::size_t k = 0; k < n; ++k) r.times.push_back(time.time(static_cast<int>(k)));
  r.energy = s.energy;
  r.gradient_energy = s.gradient_energy;
  r.cumulative_gradient = s.cumulative_gradient;
  r.initial_energy = s.energy.front();
  r.finite = true;
  for (std::size_t k = 0; k < n; ++k) {
    for (double x : {s.energy[k], s.gradient_energy[k], s.cumulative_gradient[k]})
      r.finite &= std::isfinite(x) && x >= 0.0;
  }
  r.growth_rate = growth_rate.value_or(s.drift_sup * s.drift_sup + 1.0);
  r.predicted_constant = std::exp(r.growth_rate * time.horizon);
  if (r.initial_energy > 0.0) {
    double c = 0.0;
    for (double e : s.energy) c = std::max(c, e / r.initial_energy);
    c = std::max(c, s.cumulative_gradient.back() / r.initial_energy);
    r.measured_constant = c;
  }
  r.bound_ok = r.finite && r.measured_constant <= r.predicted_constant;

  // t = 0 holds with equality; the slack is taken over t > 0.
  r.rate_inequality_slack = n > 1 ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double lhs = s.energy[k] + 0.5 * s.cumulative_gradient[k];
    const double rhs = r.initial_energy + r.growth_rate * s.cumulative_energy[k];
    r.rate_inequality_slack = std::min(r.rate_inequality_slack, rhs - lhs);
    const double bal = s.energy[k] + s.cumulative_gradient[k] - r.initial_energy - s.cumulative_divergence[k];
    r.balance_residual = std::max(r.balance_residual, std::abs(bal));
  }
  r.rate_inequality_ok = r.finite && r.rate_inequality_slack >= -1e-12 * std::max(1.0, r.initial_energy);
  return r;
}

DifferenceReport difference_energy(const MeanField& v, const MeanField& w,
                                   std::span<const double> w_cumulative_gradient,
                                   const VectorField& drift_v, const VectorField& drift_w,
                                   std::span<const double> v0, std::span<const double> w0,
                                   double sup_bound) {
  require_same_grid(v.grid, w.grid, "difference energy");
  require_same_time(v.time, w.time, "difference energy");
  if (v.steps != w.steps) throw GridMismatch("difference energy needs matching snapshots");
  if (static_cast<int>(w_cumulative_gradient.size()) != v.time.steps + 1)
    throw GridMismatch("gradient energy series does not cover the time grid");
  const Grid& grid = v.grid;
  const std::size_t size = grid.size();
  const int dim = grid.dim();
  if (v0.size() != size || w0.size() != size) throw GridMismatch("initial data do not match grid");

  DifferenceReport r;
  GridFunction sq(size);
  for (std::size_t i = 0; i < size; ++i) sq[i] = (v0[i] - w0[i]) * (v0[i] - w0[i]);
  r.initial_difference = grid.integrate(sq);

  double sup_v = 0.0, sup_w = 0.0;
  auto drift_gap = [&](double t) {
    const GridFunction a = sample(drift_v, t, grid), b = sample(drift_w, t, grid);
    GridFunction g(size, 0.0);
    for (std::size_t i = 0; i < size; ++i) {
      double sv = 0.0, sw = 0.0;
      for (int c = 0; c < dim; ++c) {
        const double d = a[c * size + i] - b[c * size + i];
        g[i] += d * d;
        sv += a[c * size + i] * a[c * size + i];
        sw += b[c * size + i] * b[c * size + i];
      }
      sup_v = std::max(sup_v, std::sqrt(sv));
      sup_w = std::max(sup_w, std::sqrt(sw));
    }
    return grid.integrate(g);
  };
  // int_0^{t_k} int |b_v - b_w|^2 by left sums (exact for autonomous drifts).
  const bool autonomous = drift_v.autonomous() && drift_w.autonomous();
  std::vector<double> gap_cum(v.time.steps + 1, 0.0);
  const double gap0 = drift_gap(0.0);
  for (int k = 0; k < v.time.steps; ++k)
    gap_cum[k + 1] = gap_cum[k] + (autonomous ? gap0 : drift_gap(v.time.time(k))) * v.time.dt();

  const double sup = std::max(sup_v, sup_w);
  r.growth_rate = sup * sup + 1.0;
  r.constant = 4.0 * sup_bound;
  r.holds = true;
  r.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < v.steps.size(); ++s) {
    const int k = v.steps[s];
    const double t = v.time.time(k);
    for (std::size_t i = 0; i < size; ++i) {
      const double d = v.values[s][i] - w.values[s][i];
      sq[i] = d * d;
    }
    const double lhs = grid.integrate(sq);
    const double rhs = std::exp(r.growth_rate * t) *
                       (r.initial_difference +
                        r.constant * std::sqrt(w_cumulative_gradient[k]) * std::sqrt(gap_cum[k]));
    r.times.push_back(t);
    r.lhs.push_back(lhs);
    r.rhs.push_back(rhs);
    r.min_slack = std::min(r.min_slack, rhs - lhs);
    if (!(lhs <= rhs * (1.0 + 1e-12) + 1e-300)) r.holds = false;
  }
  return r;
}

GridFunction heat_reference(const ScalarField& initial, double t, const Point& shift, const Grid& grid) {
  const int dim = grid.dim();
  GridFunction out(grid.size());
  if (t <= 0.0) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      Point x = grid.node(i);
      for (int a = 0; a < dim; ++a) x[a] -= shift[a];
      out[i] = initial(x);
    }
    return out;
  }
  using Rule = boost::math::quadrature::gauss<double, 8>;
  const int panels = dim == 1 ? 64 : 16;
  const double sd = std::sqrt(t);
  const double reach = 8.0 * sd;
  std::vector<double> ys, ws;
  const double pw = 2.0 * reach / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = -reach + (p + 0.5) * pw;
    for (std::size_t q = 0; q < Rule::abscissa().size(); ++q) {
      const double xa = Rule::abscissa()[q], wa = Rule::weights()[q];
      for (double sgn : {-1.0, 1.0}) {
        if (xa == 0.0 && sgn > 0.0) continue;
        const double y = mid + sgn * xa * pw / 2.0;
        ys.push_back(y);
        ws.push_back(wa * pw / 2.0 * std::exp(-y * y / (2.0 * t)) / (sd * std::sqrt(2.0 * std::numbers::pi)));
      }
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point x = grid.node(i);
    double sum = 0.0;
    if (dim == 1) {
      for (std::size_t q = 0; q < ys.size(); ++q) sum += ws[q] * initial.eval1(x[0] - shift[0] - ys[q]);
    } else {
      for (std::size_t q = 0; q < ys.size(); ++q)
        for (std::size_t r = 0; r < ys.size(); ++r)
          sum += ws[q] * ws[r] * initial(Point{x[0] - shift[0] - ys[q], x[1] - shift[1] - ys[r]});
    }
    out[i] = sum;
  }
  return out;
}

}  // namespace stochtr
