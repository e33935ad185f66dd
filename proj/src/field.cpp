#include "stochtr/field.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

namespace stochtr {

// ---------------------------------------------------------------------------
// FieldTable

FieldTable::FieldTable(Grid nodes, int components, std::vector<double> values)
    : nodes_(std::move(nodes)), components_(components), values_(std::move(values)) {
  if (values_.size() != nodes_.size() * static_cast<std::size_t>(components_))
    throw GridMismatch("field table has wrong number of values");
  x0_ = -nodes_.half_width();
  inv_h_ = 1.0 / nodes_.spacing();
  n_ = nodes_.nodes_per_axis();
  last_ = static_cast<double>(n_ - 1);
}

void FieldTable::sample(const Point& x, double* out) const {
  if (nodes_.dim() == 1) {
    for (int c = 0; c < components_; ++c) out[c] = lerp1(x[0], c);
    return;
  }
  int idx[2];
  double w[2];
  for (int a = 0; a < 2; ++a) {
    double u = std::clamp((x[a] - x0_) * inv_h_, 0.0, last_);
    int i = std::min(static_cast<int>(u), n_ - 2);
    idx[a] = i;
    w[a] = u - i;
  }
  const auto at = [&](int i, int j, int c) {
    return values_[nodes_.flat(i, j) * components_ + c];
  };
  for (int c = 0; c < components_; ++c) {
    const double lo = at(idx[0], idx[1], c) * (1 - w[0]) + at(idx[0] + 1, idx[1], c) * w[0];
    const double hi =
        at(idx[0], idx[1] + 1, c) * (1 - w[0]) + at(idx[0] + 1, idx[1] + 1, c) * w[0];
    out[c] = lo * (1 - w[1]) + hi * w[1];
  }
}

double FieldTable::max_norm() const {
  double m = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    double s = 0.0;
    for (int c = 0; c < components_; ++c) {
      const double v = values_[i * components_ + c];
      s += v * v;
    }
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

// ---------------------------------------------------------------------------
// VectorField / ScalarField

VectorField::VectorField(Spec spec) {
  if (spec.dim != 1 && spec.dim != 2) throw InvalidField("field dimension must be 1 or 2");
  if (!spec.eval) throw InvalidField("field '" + spec.id + "' has no evaluator");
  spec_ = std::make_shared<const Spec>(std::move(spec));
}

Point VectorField::operator()(double t, const Point& x) const {
  if (table_) {
    Point out{0.0, 0.0};
    table_->sample(x, out.data());
    return out;
  }
  return spec_->eval(t, x);
}

double VectorField::divergence_at(double t, const Point& x) const {
  const Divergence& div = spec_->divergence;
  switch (div.kind) {
    case DivergenceKind::Analytic:
      return div.density(t, x);
    case DivergenceKind::FiniteDifference: {
      const double h = div.fd_step;
      double sum = 0.0;
      for (int a = 0; a < dim(); ++a) {
        Point xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        sum += ((*this)(t, xp)[a] - (*this)(t, xm)[a]) / (2.0 * h);
      }
      return sum;
    }
    case DivergenceKind::Distributional:
      break;
  }
  throw InvalidField("field '" + id() + "' has a distributional divergence");
}

VectorField VectorField::with_table(std::shared_ptr<const FieldTable> table) const {
  VectorField out = *this;
  out.table_ = std::move(table);
  return out;
}

ScalarField::ScalarField(Spec spec) {
  if (spec.dim != 1 && spec.dim != 2) throw InvalidField("field dimension must be 1 or 2");
  if (!spec.eval) throw InvalidField("field '" + spec.id + "' has no evaluator");
  spec_ = std::make_shared<const Spec>(std::move(spec));
}

double ScalarField::operator()(const Point& x) const {
  if (table_) {
    double v = 0.0;
    table_->sample(x, &v);
    return v;
  }
  return spec_->eval(x);
}

ScalarField ScalarField::with_table(std::shared_ptr<const FieldTable> table) const {
  ScalarField out = *this;
  out.table_ = std::move(table);
  return out;
}

ScalarField field_from_grid(std::string id, const Grid& grid, GridFunction values) {
  double sup = 0.0;
  for (double v : values) sup = std::max(sup, std::abs(v));
  auto table = std::make_shared<const FieldTable>(grid, 1, std::move(values));
  ScalarField::Spec spec;
  spec.id = std::move(id);
  spec.description = "piecewise-linear interpolant of grid data";
  spec.dim = grid.dim();
  spec.half_width = grid.half_width();
  spec.eval = [table](const Point& x) {
    double v = 0.0;
    table->sample(x, &v);
    return v;
  };
  spec.sup_bound = sup;
  return ScalarField(std::move(spec)).with_table(table);
}

// ---------------------------------------------------------------------------
// Mollifiers

std::string to_string(MollifierKind kind) {
  return kind == MollifierKind::Bump ? "bump" : "gaussian";
}

MollifierKind parse_mollifier_kind(std::string_view name) {
  if (name == "bump") return MollifierKind::Bump;
  if (name == "gaussian" || name == "truncated-gaussian") return MollifierKind::TruncatedGaussian;
  throw ConfigError("unknown mollifier kind '" + std::string(name) + "'");
}

namespace {

double bump_profile(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

double bump_mass(int dim) {
  static const double mass1 = [] {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate([](double x) { return bump_profile(x * x); }, -1.0, 1.0);
  }();
  static const double mass2 = [] {
    boost::math::quadrature::tanh_sinh<double> ts;
    return 2.0 * std::numbers::pi *
           ts.integrate([](double r) { return r * bump_profile(r * r); }, 0.0, 1.0);
  }();
  return dim == 1 ? mass1 : mass2;
}

}  // namespace

Mollifier::Mollifier(MollifierKind kind, double width, int dim)
    : kind_(kind), width_(width), dim_(dim) {
  if (!(width > 0.0) || !std::isfinite(width))
    throw InvalidMollifier("mollifier width must be positive");
  if (dim != 1 && dim != 2) throw InvalidMollifier("mollifier dimension must be 1 or 2");
  if (kind == MollifierKind::Bump) {
    scale_ = 1.0 / (bump_mass(dim) * std::pow(width, dim));
  } else {
    const double sigma = width / 2.0;
    const double mass = dim == 1 ? sigma * std::sqrt(2.0 * std::numbers::pi) * std::erf(std::sqrt(2.0))
                                 : 2.0 * std::numbers::pi * sigma * sigma * (1.0 - std::exp(-2.0));
    scale_ = 1.0 / mass;
  }
}

double Mollifier::operator()(const Point& x) const {
  const double r2 = norm_sq(x, dim_) / (width_ * width_);
  if (r2 >= 1.0) return 0.0;
  if (kind_ == MollifierKind::Bump) return scale_ * bump_profile(r2);
  return scale_ * std::exp(-2.0 * r2);  // exp(-|x|^2 / (2 (eps/2)^2))
}

Point Mollifier::gradient(const Point& x) const {
  const double r2 = norm_sq(x, dim_) / (width_ * width_);
  if (r2 >= 1.0) return {0.0, 0.0};
  // d/dx_a of the profile in r2 = |x|^2 / eps^2.
  double dprofile;
  if (kind_ == MollifierKind::Bump) {
    const double s = 1.0 - r2;
    dprofile = -scale_ * bump_profile(r2) / (s * s);
  } else {
    dprofile = -2.0 * scale_ * std::exp(-2.0 * r2);
  }
  const double c = 2.0 * dprofile / (width_ * width_);
  return {c * x[0], dim_ == 2 ? c * x[1] : 0.0};
}

double Mollifier::edge_value() const {
  return kind_ == MollifierKind::Bump ? 0.0 : scale_ * std::exp(-2.0);
}

std::string Mollifier::name() const { return to_string(kind_); }

// ---------------------------------------------------------------------------
// Convolution quadrature

namespace {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

constexpr int kPanelOrder = 8;

const Rule& reference_rule() {
  static const Rule rule = [] {
    using GL = boost::math::quadrature::gauss<double, kPanelOrder>;
    Rule r;
    const auto& a = GL::abscissa();
    const auto& w = GL::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0.0) {
        r.nodes.push_back(0.0);
        r.weights.push_back(w[i]);
        continue;
      }
      r.nodes.push_back(-a[i]);
      r.weights.push_back(w[i]);
      r.nodes.push_back(a[i]);
      r.weights.push_back(w[i]);
    }
    return r;
  }();
  return rule;
}

/// Panel Gauss-Legendre rule on [lo, hi] with `panels` uniform panels and
/// extra panel edges at `splits`.
Rule panel_rule(double lo, double hi, int panels, const std::vector<double>& splits) {
  std::vector<double> edges;
  edges.reserve(panels + 1 + splits.size());
  for (int p = 0; p <= panels; ++p) edges.push_back(lo + (hi - lo) * p / panels);
  for (double s : splits)
    if (s > lo && s < hi) edges.push_back(s);
  std::sort(edges.begin(), edges.end());
  const double tiny = 1e-13 * (hi - lo);
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [tiny](double a, double b) { return b - a < tiny; }),
              edges.end());
  const Rule& ref = reference_rule();
  Rule r;
  r.nodes.reserve((edges.size() - 1) * ref.nodes.size());
  r.weights.reserve(r.nodes.capacity());
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double mid = 0.5 * (edges[e] + edges[e + 1]);
    const double half = 0.5 * (edges[e + 1] - edges[e]);
    for (std::size_t q = 0; q < ref.nodes.size(); ++q) {
      r.nodes.push_back(mid + half * ref.nodes[q]);
      r.weights.push_back(half * ref.weights[q]);
    }
  }
  return r;
}

/// Kernel offsets y, at which f(x - y) is sampled, with weights w rho(y).
/// The weights are normalised to sum to one so constants are reproduced exactly.
/// `grad` holds the matching weights of grad rho (per axis, same normalisation),
/// including the edge terms of a kernel with a jump at |y| = eps.
struct KernelRule {
  std::vector<Point> offsets;
  std::vector<double> weights;
  std::vector<Point> grad;
};

constexpr int kEdgeNodes2d = 64;

KernelRule kernel_rule(const Mollifier& rho, const Point& x, const std::vector<double>& breakpoints) {
  const double eps = rho.width();
  const int dim = rho.dim();
  const int panels = dim == 1 ? 16 : 4;
  Rule axis[2];
  for (int a = 0; a < dim; ++a) {
    std::vector<double> splits;
    for (double p : breakpoints) splits.push_back(x[a] - p);
    axis[a] = panel_rule(-eps, eps, panels, splits);
  }
  KernelRule k;
  double total = 0.0;
  auto add = [&](const Point& y, double q) {
    const double w = q * rho(y);
    if (w == 0.0) return;
    const Point g = rho.gradient(y);
    k.offsets.push_back(y);
    k.weights.push_back(w);
    k.grad.push_back({q * g[0], q * g[1]});
    total += w;
  };
  if (dim == 1) {
    for (std::size_t i = 0; i < axis[0].nodes.size(); ++i) add({axis[0].nodes[i], 0.0}, axis[0].weights[i]);
  } else {
    for (std::size_t j = 0; j < axis[1].nodes.size(); ++j)
      for (std::size_t i = 0; i < axis[0].nodes.size(); ++i)
        add({axis[0].nodes[i], axis[1].nodes[j]}, axis[0].weights[i] * axis[1].weights[j]);
  }
  // grad of the indicator of the support ball: -n dS on the sphere |y| = eps.
  if (const double edge = rho.edge_value(); edge > 0.0) {
    if (dim == 1) {
      for (double n : {-1.0, 1.0}) {
        k.offsets.push_back({n * eps, 0.0});
        k.weights.push_back(0.0);
        k.grad.push_back({-edge * n, 0.0});
      }
    } else {
      const double ds = 2.0 * std::numbers::pi * eps / kEdgeNodes2d;
      for (int m = 0; m < kEdgeNodes2d; ++m) {
        const double th = 2.0 * std::numbers::pi * (m + 0.5) / kEdgeNodes2d;
        const Point n{std::cos(th), std::sin(th)};
        k.offsets.push_back({eps * n[0], eps * n[1]});
        k.weights.push_back(0.0);
        k.grad.push_back({-edge * n[0] * ds, -edge * n[1] * ds});
      }
    }
  }
  for (double& w : k.weights) w /= total;
  for (Point& g : k.grad) g = {g[0] / total, g[1] / total};
  return k;
}

void check_mollifier_fits(const Mollifier& rho, int dim, double half_width) {
  if (rho.dim() != dim) throw InvalidMollifier("mollifier and field dimensions differ");
  if (rho.width() > half_width / 4.0)
    throw InvalidMollifier("mollifier width exceeds a quarter of the box half width");
}

}  // namespace

VectorField mollify_field(const VectorField& field, const Mollifier& rho) {
  check_mollifier_fits(rho, field.dim(), field.half_width());
  VectorField::Spec spec;
  spec.id = field.id() + "*" + rho.name() + ":" + std::to_string(rho.width());
  spec.description = "mollification of " + field.id();
  spec.dim = field.dim();
  spec.half_width = field.half_width();
  spec.sup_bound = field.sup_bound();
  spec.l2_bound = field.l2_bound();
  spec.autonomous = field.autonomous();
  const int dim = field.dim();
  spec.eval = [field, rho, dim](double t, const Point& x) {
    const KernelRule k = kernel_rule(rho, x, field.breakpoints());
    Point out{0.0, 0.0};
    for (std::size_t q = 0; q < k.offsets.size(); ++q) {
      const Point y{x[0] - k.offsets[q][0], x[1] - k.offsets[q][1]};
      const Point v = field(t, y);
      for (int a = 0; a < dim; ++a) out[a] += k.weights[q] * v[a];
    }
    return out;
  };
  spec.divergence.kind = DivergenceKind::Analytic;
  spec.divergence.density = [field, rho, dim](double t, const Point& x) {
    const KernelRule k = kernel_rule(rho, x, field.breakpoints());
    double out = 0.0;
    for (std::size_t q = 0; q < k.offsets.size(); ++q) {
      const Point v = field(t, Point{x[0] - k.offsets[q][0], x[1] - k.offsets[q][1]});
      for (int a = 0; a < dim; ++a) out += k.grad[q][a] * v[a];
    }
    return out;
  };
  return VectorField(std::move(spec));
}

ScalarField mollify_initial(const ScalarField& field, const Mollifier& rho) {
  check_mollifier_fits(rho, field.dim(), field.half_width());
  ScalarField::Spec spec;
  spec.id = field.id() + "*" + rho.name() + ":" + std::to_string(rho.width());
  spec.description = "mollification of " + field.id();
  spec.dim = field.dim();
  spec.half_width = field.half_width();
  spec.sup_bound = field.sup_bound();
  spec.l2_bound = field.l2_bound();
  auto eval = [field, rho](const Point& x) {
    const KernelRule k = kernel_rule(rho, x, field.breakpoints());
    double out = 0.0;
    for (std::size_t q = 0; q < k.offsets.size(); ++q)
      out += k.weights[q] * field(Point{x[0] - k.offsets[q][0], x[1] - k.offsets[q][1]});
    return out;
  };
  spec.gradient = [field, rho](const Point& x) {
    const KernelRule k = kernel_rule(rho, x, field.breakpoints());
    Point g{0.0, 0.0};
    for (std::size_t q = 0; q < k.offsets.size(); ++q) {
      const double v = field(Point{x[0] - k.offsets[q][0], x[1] - k.offsets[q][1]});
      g[0] += k.grad[q][0] * v;
      g[1] += k.grad[q][1] * v;
    }
    return g;
  };
  spec.eval = std::move(eval);
  return ScalarField(std::move(spec));
}

namespace {

Grid table_grid(int dim, double half_width, double spacing) {
  if (!(spacing > 0.0)) throw ConfigError("table spacing must be positive");
  const int cells = std::max(2, static_cast<int>(std::ceil(2.0 * half_width / spacing - 1e-9)));
  return Grid(dim, half_width, cells);
}

}  // namespace

VectorField tabulate(const VectorField& field, double spacing) {
  if (!field.autonomous()) throw InvalidField("only autonomous fields can be tabulated");
  Grid nodes = table_grid(field.dim(), field.half_width(), spacing);
  const int c = field.dim();
  std::vector<double> values(nodes.size() * c);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Point v = field(0.0, nodes.node(i));
    for (int a = 0; a < c; ++a) {
      if (!std::isfinite(v[a])) throw InvalidField("non-finite value in field '" + field.id() + "'");
      values[i * c + a] = v[a];
    }
  }
  return field.with_table(std::make_shared<const FieldTable>(nodes, c, std::move(values)));
}

ScalarField tabulate(const ScalarField& field, double spacing) {
  Grid nodes = table_grid(field.dim(), field.half_width(), spacing);
  std::vector<double> values(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    values[i] = field(nodes.node(i));
    if (!std::isfinite(values[i])) throw InvalidField("non-finite value in field '" + field.id() + "'");
  }
  return field.with_table(std::make_shared<const FieldTable>(nodes, 1, std::move(values)));
}

GridFunction sample(const ScalarField& field, const Grid& grid) {
  GridFunction out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = field(grid.node(i));
  return out;
}

GridFunction sample(const VectorField& field, double t, const Grid& grid) {
  const int dim = field.dim();
  GridFunction out(grid.size() * dim);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point v = field(t, grid.node(i));
    for (int a = 0; a < dim; ++a) out[a * grid.size() + i] = v[a];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hypothesis checks

namespace {

/// Edges of [lo, hi] refined at breakpoints.
std::vector<double> panel_edges(double lo, double hi, int panels, const std::vector<double>& bps) {
  std::vector<double> e;
  for (int p = 0; p <= panels; ++p) e.push_back(lo + (hi - lo) * p / panels);
  for (double b : bps)
    if (b > lo && b < hi) e.push_back(b);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

/// int over [-r, r]^d of g, with panels split at breakpoints. In d = 1 every
/// panel is integrated by tanh-sinh, which tolerates integrable endpoint
/// singularities such as |x|^(-1/2).
template <class G>
double box_integral(int dim, double r, const std::vector<double>& bps, G&& g) {
  if (dim == 1) {
    boost::math::quadrature::tanh_sinh<double> ts;
    double sum = 0.0;
    const auto e = panel_edges(-r, r, 16, bps);
    for (std::size_t i = 0; i + 1 < e.size(); ++i)
      sum += ts.integrate([&](double x) { return g(Point{x, 0.0}); }, e[i], e[i + 1]);
    return sum;
  }
  const Rule rule = panel_rule(-r, r, 32, bps);
  double sum = 0.0;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j)
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      sum += rule.weights[i] * rule.weights[j] * g(Point{rule.nodes[i], rule.nodes[j]});
  return sum;
}

/// Time integral of an integrand by 8-point Gauss-Legendre, or a product when
/// the integrand does not depend on time.
template <class G>
double time_integral(double horizon, bool autonomous, G&& g) {
  if (autonomous) return horizon * g(0.0);
  const Rule rule = panel_rule(0.0, horizon, 4, {});
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * g(rule.nodes[i]);
  return sum;
}

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw InvalidField("non-finite evaluation of " + what);
}

}  // namespace

HypothesisReport validate_hypothesis(const VectorField& drift, const ScalarField& initial,
                                     double horizon) {
  if (drift.dim() != initial.dim() || drift.half_width() != initial.half_width())
    throw GridMismatch("drift and initial data live on different boxes");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  const int dim = drift.dim();
  const double L = drift.half_width();
  HypothesisReport rep;

  // Sup norms and finiteness by sampling.
  const Grid probe(dim, L, dim == 1 ? 4000 : 200);
  const std::vector<double> times = drift.autonomous()
                                        ? std::vector<double>{0.0}
                                        : std::vector<double>{0.0, horizon / 4, horizon / 2,
                                                              3 * horizon / 4, horizon};
  for (double t : times) {
    for (std::size_t i = 0; i < probe.size(); ++i) {
      const Point v = drift(t, probe.node(i));
      const double n = std::sqrt(norm_sq(v, dim));
      require_finite(n, "drift '" + drift.id() + "'");
      rep.drift_linf = std::max(rep.drift_linf, n);
    }
  }
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double v = initial(probe.node(i));
    require_finite(v, "initial data '" + initial.id() + "'");
    rep.initial_linf = std::max(rep.initial_linf, std::abs(v));
  }

  const double drift_l2_sq = time_integral(horizon, drift.autonomous(), [&](double t) {
    return box_integral(dim, L, drift.breakpoints(),
                        [&](const Point& x) { return norm_sq(drift(t, x), dim); });
  });
  rep.drift_l2 = std::sqrt(drift_l2_sq);
  require_finite(rep.drift_l2, "drift L2 norm");

  const Divergence& div = drift.divergence();
  rep.distributional = div.kind == DivergenceKind::Distributional;
  rep.atoms = div.atoms;
  const bool has_density = div.kind != DivergenceKind::Distributional || div.density;
  if (has_density) {
    rep.divergence_l1 = time_integral(horizon, drift.autonomous(), [&](double t) {
      return box_integral(dim, L / 2.0, drift.breakpoints(), [&](const Point& x) {
        const double d = div.kind == DivergenceKind::Distributional ? div.density(t, x)
                                                                     : drift.divergence_at(t, x);
        return std::abs(d);
      });
    });
  }

  rep.initial_l2 = std::sqrt(box_integral(dim, L, initial.breakpoints(), [&](const Point& x) {
    const double v = initial(x);
    return v * v;
  }));

  const double slack = 1e-9;
  rep.con1_ok = std::isfinite(rep.drift_l2) && rep.drift_linf <= drift.sup_bound() * (1 + slack) + slack;
  rep.con2_ok = !rep.distributional && std::isfinite(rep.divergence_l1);
  rep.conic_ok = std::isfinite(rep.initial_l2) &&
                 rep.initial_linf <= initial.sup_bound() * (1 + slack) + slack;
  return rep;
}

// ---------------------------------------------------------------------------
// Catalog

namespace {

double cutoff_f(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double cutoff_df(double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

constexpr double kGaussWidth = 0.3;

std::optional<double> parse_suffix_number(std::string_view id, std::string_view prefix) {
  if (id.substr(0, prefix.size()) != prefix) return std::nullopt;
  const std::string text(id.substr(prefix.size()));
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw ConfigError("bad number");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse number in id '" + std::string(id) + "'");
  }
}

VectorField::Spec base_drift(std::string id, std::string description, int dim, double L) {
  VectorField::Spec s;
  s.id = std::move(id);
  s.description = std::move(description);
  s.dim = dim;
  s.half_width = L;
  return s;
}

Divergence analytic(std::function<double(double, const Point&)> f) {
  Divergence d;
  d.kind = DivergenceKind::Analytic;
  d.density = std::move(f);
  return d;
}

}  // namespace

double smooth_cutoff(double r) {
  const double s = (1.5 - r) / 0.5;
  if (s >= 1.0) return 1.0;
  if (s <= 0.0) return 0.0;
  return cutoff_f(s) / (cutoff_f(s) + cutoff_f(1.0 - s));
}

double smooth_cutoff_derivative(double r) {
  const double s = (1.5 - r) / 0.5;
  if (s >= 1.0 || s <= 0.0) return 0.0;
  const double a = cutoff_f(s), b = cutoff_f(1.0 - s);
  const double dsds = (cutoff_df(s) * b + a * cutoff_df(1.0 - s)) / ((a + b) * (a + b));
  return dsds * (-2.0);
}

std::vector<CatalogId> drift_ids() {
  return {
      {"zero", "b = 0", 1},
      {"const:<c>", "b = c everywhere (e.g. const:0.5)", 1},
      {"ou", "Ornstein-Uhlenbeck b = -x, smoothly clipped beyond |x| = 1; div b = -1 for |x| <= 1", 1},
      {"sign", "expanding b = sign(x) on [-1, 1]; div b = 2 delta_0 - delta_1 - delta_-1 (distributional)", 1},
      {"compress", "compressive b = -sign(x) on [-1, 1]; distributional divergence", 1},
      {"sqrtsign", "b = sign(x)|x|^(1/2), smoothly clipped; bounded, div b in L1_loc but unbounded", 1},
      {"ou2", "2-d Ornstein-Uhlenbeck b = -x, smoothly clipped", 2},
      {"rot2", "2-d rotation b = (-y, x), smoothly clipped; divergence free", 2},
      {"sign2", "2-d shear-free b = (sign(x) 1_{|x|<=1} chi(|y|), 0); distributional divergence", 2},
  };
}

std::vector<CatalogId> initial_ids() {
  return {
      {"gauss", "clipped Gaussian exp(-x^2 / (2 * 0.3^2)) on |x| <= L/2", 1},
      {"bump", "smooth bump exp(1 - 1/(1 - x^2)) on |x| < 1", 1},
      {"step", "indicator of [0, 1]", 1},
      {"one", "indicator of [-L/2, L/2]", 1},
      {"odd", "odd profile (x/0.3) exp(1/2 - x^2/(2 * 0.3^2)) on |x| <= L/2", 1},
      {"const:<v>", "u0 = v everywhere", 1},
      {"gauss2", "2-d clipped Gaussian", 2},
  };
}

VectorField make_drift(std::string_view id, double L) {
  if (id == "zero") {
    auto s = base_drift("zero", "b = 0", 1, L);
    s.eval = [](double, const Point&) { return Point{0.0, 0.0}; };
    s.sup_bound = 0.0;
    s.l2_bound = 0.0;
    s.divergence = analytic([](double, const Point&) { return 0.0; });
    return VectorField(std::move(s));
  }
  if (auto c = parse_suffix_number(id, "const:")) {
    const double v = *c;
    auto s = base_drift(std::string(id), "constant drift", 1, L);
    s.eval = [v](double, const Point&) { return Point{v, 0.0}; };
    s.sup_bound = std::abs(v);
    s.l2_bound = std::abs(v) * std::sqrt(2.0 * L);
    s.divergence = analytic([](double, const Point&) { return 0.0; });
    return VectorField(std::move(s));
  }
  if (id == "ou") {
    auto s = base_drift("ou", "Ornstein-Uhlenbeck drift, smoothly clipped", 1, L);
    s.eval = [](double, const Point& x) {
      return Point{-x[0] * smooth_cutoff(std::abs(x[0])), 0.0};
    };
    s.sup_bound = 1.5;
    s.divergence = analytic([](double, const Point& x) {
      const double r = std::abs(x[0]);
      return -smooth_cutoff(r) - r * smooth_cutoff_derivative(r);
    });
    return VectorField(std::move(s));
  }
  if (id == "sign" || id == "compress") {
    const double dir = id == "sign" ? 1.0 : -1.0;
    auto s = base_drift(std::string(id), id == "sign" ? "expanding sign drift" : "compressive sign drift",
                        1, L);
    s.eval = [dir](double, const Point& x) {
      return Point{std::abs(x[0]) <= 1.0 ? dir * sgn(x[0]) : 0.0, 0.0};
    };
    s.sup_bound = 1.0;
    s.l2_bound = std::sqrt(2.0);
    s.divergence.kind = DivergenceKind::Distributional;
    s.divergence.atoms = {{{0.0, 0.0}, 2.0 * dir}, {{-1.0, 0.0}, -dir}, {{1.0, 0.0}, -dir}};
    s.breakpoints = {-1.0, 0.0, 1.0};
    return VectorField(std::move(s));
  }
  if (id == "sqrtsign") {
    auto s = base_drift("sqrtsign", "sign(x)|x|^(1/2), smoothly clipped", 1, L);
    s.eval = [](double, const Point& x) {
      const double r = std::abs(x[0]);
      return Point{sgn(x[0]) * std::sqrt(r) * smooth_cutoff(r), 0.0};
    };
    s.sup_bound = std::sqrt(1.5);
    s.divergence = analytic([](double, const Point& x) {
      const double r = std::abs(x[0]);
      return 0.5 / std::sqrt(r) * smooth_cutoff(r) + std::sqrt(r) * smooth_cutoff_derivative(r);
    });
    s.breakpoints = {0.0};
    return VectorField(std::move(s));
  }
  if (id == "ou2") {
    auto s = base_drift("ou2", "2-d Ornstein-Uhlenbeck drift, smoothly clipped", 2, L);
    s.eval = [](double, const Point& x) {
      const double c = smooth_cutoff(std::sqrt(norm_sq(x, 2)));
      return Point{-x[0] * c, -x[1] * c};
    };
    s.sup_bound = 1.5;
    s.divergence = analytic([](double, const Point& x) {
      const double r = std::sqrt(norm_sq(x, 2));
      return -2.0 * smooth_cutoff(r) - r * smooth_cutoff_derivative(r);
    });
    return VectorField(std::move(s));
  }
  if (id == "rot2") {
    auto s = base_drift("rot2", "2-d rotation, smoothly clipped", 2, L);
    s.eval = [](double, const Point& x) {
      const double c = smooth_cutoff(std::sqrt(norm_sq(x, 2)));
      return Point{-x[1] * c, x[0] * c};
    };
    s.sup_bound = 1.5;
    s.divergence = analytic([](double, const Point&) { return 0.0; });
    return VectorField(std::move(s));
  }
  if (id == "sign2") {
    auto s = base_drift("sign2", "2-d sign drift in the first coordinate", 2, L);
    s.eval = [](double, const Point& x) {
      const double v = std::abs(x[0]) <= 1.0 ? sgn(x[0]) * smooth_cutoff(std::abs(x[1])) : 0.0;
      return Point{v, 0.0};
    };
    s.sup_bound = 1.0;
    s.divergence.kind = DivergenceKind::Distributional;  // concentrated on lines; no point atoms
    s.breakpoints = {-1.0, 0.0, 1.0};
    return VectorField(std::move(s));
  }
  throw ConfigError("unknown drift id '" + std::string(id) + "'");
}

ScalarField make_initial(std::string_view id, double L) {
  ScalarField::Spec s;
  s.id = std::string(id);
  s.dim = 1;
  s.half_width = L;
  const double clip = L / 2.0;
  if (id == "gauss" || id == "gauss2") {
    const int dim = id == "gauss" ? 1 : 2;
    s.dim = dim;
    s.description = "clipped Gaussian";
    auto inside = [clip, dim](const Point& x) {
      return std::abs(x[0]) <= clip && (dim == 1 || std::abs(x[1]) <= clip);
    };
    s.eval = [inside, dim](const Point& x) {
      return inside(x) ? std::exp(-norm_sq(x, dim) / (2 * kGaussWidth * kGaussWidth)) : 0.0;
    };
    s.gradient = [inside, dim](const Point& x) {
      if (!inside(x)) return Point{0.0, 0.0};
      const double v = std::exp(-norm_sq(x, dim) / (2 * kGaussWidth * kGaussWidth));
      const double k = -v / (kGaussWidth * kGaussWidth);
      return Point{k * x[0], dim == 2 ? k * x[1] : 0.0};
    };
    s.sup_bound = 1.0;
    s.breakpoints = {-clip, clip};
    return ScalarField(std::move(s));
  }
  if (id == "bump") {
    s.description = "smooth bump";
    s.eval = [](const Point& x) {
      const double r2 = x[0] * x[0];
      return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
    };
    s.gradient = [](const Point& x) {
      const double r2 = x[0] * x[0];
      if (r2 >= 1.0) return Point{0.0, 0.0};
      const double q = 1.0 - r2;
      return Point{std::exp(1.0 - 1.0 / q) * (-2.0 * x[0] / (q * q)), 0.0};
    };
    s.sup_bound = 1.0;
    return ScalarField(std::move(s));
  }
  if (id == "step") {
    s.description = "indicator of [0, 1]";
    s.eval = [](const Point& x) { return (x[0] >= 0.0 && x[0] <= 1.0) ? 1.0 : 0.0; };
    s.sup_bound = 1.0;
    s.l2_bound = 1.0;
    s.breakpoints = {0.0, 1.0};
    return ScalarField(std::move(s));
  }
  if (id == "one") {
    s.description = "indicator of the box interior";
    s.eval = [clip](const Point& x) { return std::abs(x[0]) <= clip ? 1.0 : 0.0; };
    s.sup_bound = 1.0;
    s.l2_bound = std::sqrt(2.0 * clip);
    s.breakpoints = {-clip, clip};
    return ScalarField(std::move(s));
  }
  if (id == "odd") {
    s.description = "odd profile";
    s.eval = [clip](const Point& x) {
      if (std::abs(x[0]) > clip) return 0.0;
      const double z = x[0] / kGaussWidth;
      return z * std::exp(0.5 - 0.5 * z * z);
    };
    s.sup_bound = 1.0;
    s.breakpoints = {-clip, clip};
    return ScalarField(std::move(s));
  }
  if (auto v = parse_suffix_number(id, "const:")) {
    const double c = *v;
    s.description = "constant";
    s.eval = [c](const Point&) { return c; };
    s.gradient = [](const Point&) { return Point{0.0, 0.0}; };
    s.sup_bound = std::abs(c);
    return ScalarField(std::move(s));
  }
  throw ConfigError("unknown initial-data id '" + std::string(id) + "'");
}

std::vector<CatalogEntry> builtin_examples(double L) {
  std::vector<CatalogEntry> out;
  const std::pair<const char*, const char*> pairs[] = {
      {"zero", "gauss"},  {"const:0.5", "gauss"}, {"ou", "gauss"},   {"sign", "gauss"},
      {"compress", "gauss"}, {"sqrtsign", "gauss"}, {"ou2", "gauss2"}, {"rot2", "gauss2"},
      {"sign2", "gauss2"},
  };
  for (const auto& [b, u] : pairs) {
    VectorField drift = make_drift(b, L);
    std::string desc = drift.description();
    out.push_back({std::string(b), std::move(desc), std::move(drift), make_initial(u, L)});
  }
  return out;
}

}  // namespace stochtr
