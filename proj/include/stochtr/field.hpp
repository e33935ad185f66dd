#pragma once

// Drifts, initial data and their mollification.
//
// Fields are immutable values: copies share one evaluation closure and, when
// tabulated, one read-only table. Evaluation is pure and reentrant.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stochtr/grid.hpp"

namespace stochtr {

enum class DivergenceKind { Analytic, FiniteDifference, Distributional };

/// A point mass of a distributional divergence, e.g. 2*delta_0 for sign(x).
struct DivergenceAtom {
  Point location{};
  double mass = 0.0;
};

struct Divergence {
  DivergenceKind kind = DivergenceKind::Analytic;
  /// Analytic: the divergence itself. Distributional: its absolutely
  /// continuous part, possibly empty (treated as zero).
  std::function<double(double, const Point&)> density;
  std::vector<DivergenceAtom> atoms;
  /// Centred-difference step for FiniteDifference.
  double fd_step = 0.0;
};

/// Multilinear interpolation table of an autonomous field on a uniform grid.
/// Queries outside the box are clamped to the box.
class FieldTable {
 public:
  FieldTable(Grid nodes, int components, std::vector<double> values);

  const Grid& nodes() const { return nodes_; }
  int components() const { return components_; }
  std::span<const double> values() const { return values_; }

  /// Fast path for d = 1.
  double lerp1(double x, int component = 0) const {
    double u = (x - x0_) * inv_h_;
    if (u < 0.0) u = 0.0;
    if (u > last_) u = last_;
    int i = static_cast<int>(u);
    if (i >= n_ - 1) i = n_ - 2;
    const double w = u - i;
    const double* v = values_.data() + static_cast<std::size_t>(i) * components_ + component;
    return v[0] * (1.0 - w) + v[components_] * w;
  }

  void sample(const Point& x, double* out) const;
  double max_norm() const;

 private:
  Grid nodes_;
  int components_;
  std::vector<double> values_;  // node-major, component-minor
  double x0_;
  double inv_h_;
  double last_;
  int n_;
};

class VectorField {
 public:
  using Eval = std::function<Point(double, const Point&)>;

  struct Spec {
    std::string id;
    std::string description;
    int dim = 1;
    double half_width = 3.0;
    Eval eval;
    double sup_bound = 0.0;
    std::optional<double> l2_bound;
    Divergence divergence;
    /// Coordinates (on every axis) across which the field may be discontinuous
    /// or non-smooth. Convolution quadrature splits its panels there.
    std::vector<double> breakpoints;
    bool autonomous = true;
  };

  VectorField() = default;
  explicit VectorField(Spec spec);

  Point operator()(double t, const Point& x) const;
  /// d = 1 fast path; uses the table when present.
  double eval1(double t, double x) const {
    if (table_) return table_->lerp1(x);
    return spec_->eval(t, Point{x, 0.0})[0];
  }

  const std::string& id() const { return spec_->id; }
  const std::string& description() const { return spec_->description; }
  int dim() const { return spec_->dim; }
  double half_width() const { return spec_->half_width; }
  double sup_bound() const { return spec_->sup_bound; }
  std::optional<double> l2_bound() const { return spec_->l2_bound; }
  const Divergence& divergence() const { return spec_->divergence; }
  bool distributional_divergence() const {
    return spec_->divergence.kind == DivergenceKind::Distributional;
  }
  const std::vector<double>& breakpoints() const { return spec_->breakpoints; }
  bool autonomous() const { return spec_->autonomous; }
  const FieldTable* table() const { return table_.get(); }

  /// Pointwise divergence; throws InvalidField for a distributional divergence.
  double divergence_at(double t, const Point& x) const;

  /// Same field, evaluated through a table. Only for autonomous fields.
  VectorField with_table(std::shared_ptr<const FieldTable> table) const;

 private:
  std::shared_ptr<const Spec> spec_;
  std::shared_ptr<const FieldTable> table_;
};

class ScalarField {
 public:
  using Eval = std::function<double(const Point&)>;
  using Gradient = std::function<Point(const Point&)>;

  struct Spec {
    std::string id;
    std::string description;
    int dim = 1;
    double half_width = 3.0;
    Eval eval;
    Gradient gradient;  // optional
    double sup_bound = 0.0;
    std::optional<double> l2_bound;
    std::vector<double> breakpoints;
  };

  ScalarField() = default;
  explicit ScalarField(Spec spec);

  double operator()(const Point& x) const;
  double eval1(double x) const {
    if (table_) return table_->lerp1(x);
    return spec_->eval(Point{x, 0.0});
  }

  const std::string& id() const { return spec_->id; }
  const std::string& description() const { return spec_->description; }
  int dim() const { return spec_->dim; }
  double half_width() const { return spec_->half_width; }
  double sup_bound() const { return spec_->sup_bound; }
  std::optional<double> l2_bound() const { return spec_->l2_bound; }
  const std::vector<double>& breakpoints() const { return spec_->breakpoints; }
  bool has_gradient() const { return static_cast<bool>(spec_->gradient); }
  Point gradient(const Point& x) const { return spec_->gradient(x); }
  const FieldTable* table() const { return table_.get(); }

  ScalarField with_table(std::shared_ptr<const FieldTable> table) const;

 private:
  std::shared_ptr<const Spec> spec_;
  std::shared_ptr<const FieldTable> table_;
};

/// Piecewise-linear scalar field interpolating grid values (clamped outside).
ScalarField field_from_grid(std::string id, const Grid& grid, GridFunction values);

enum class MollifierKind { Bump, TruncatedGaussian };

std::string to_string(MollifierKind kind);
MollifierKind parse_mollifier_kind(std::string_view name);

/// Symmetric, positive, mass-one kernel of width eps supported in the ball of
/// radius eps. The bump is Z^-1 exp(-1/(1-|x|^2)) rescaled; the truncated
/// Gaussian has standard deviation eps/2 and is cut at radius eps.
class Mollifier {
 public:
  Mollifier(MollifierKind kind, double width, int dim = 1);

  double operator()(const Point& x) const;
  /// Gradient inside the open support ball.
  Point gradient(const Point& x) const;
  /// Limit of the kernel at the edge of its support from inside (0 for the bump).
  double edge_value() const;
  MollifierKind kind() const { return kind_; }
  double width() const { return width_; }
  double support_radius() const { return width_; }
  int dim() const { return dim_; }
  std::string name() const;

 private:
  MollifierKind kind_;
  double width_;
  int dim_;
  double scale_;  // normalisation including width^-d
};

/// b^eps = b * rho_eps, evaluated by panel Gauss-Legendre quadrature of the
/// convolution, panels split at the field's breakpoints. The result is smooth.
/// Its divergence (and the gradient of mollified initial data) is b * grad rho_eps
/// on the same quadrature, plus the edge term of a kernel that jumps at its support.
VectorField mollify_field(const VectorField& field, const Mollifier& rho);
ScalarField mollify_initial(const ScalarField& field, const Mollifier& rho);

/// Cache an autonomous field on a uniform table of the given node spacing over
/// its own box.
VectorField tabulate(const VectorField& field, double spacing);
ScalarField tabulate(const ScalarField& field, double spacing);

/// Grid samples of a field.
GridFunction sample(const ScalarField& field, const Grid& grid);
/// Component-major samples: sample(field)[a * grid.size() + i].
GridFunction sample(const VectorField& field, double t, const Grid& grid);

struct HypothesisReport {
  bool con1_ok = false;   // b in L2 and Linf
  bool con2_ok = false;   // div b in L1_loc
  bool conic_ok = false;  // u0 in L2 and Linf
  double drift_l2 = 0.0;
  double drift_linf = 0.0;
  /// int_0^T int_K |div b| of the absolutely continuous part, K = [-L/2, L/2]^d.
  double divergence_l1 = 0.0;
  bool distributional = false;
  std::vector<DivergenceAtom> atoms;
  double initial_l2 = 0.0;
  double initial_linf = 0.0;
};

HypothesisReport validate_hypothesis(const VectorField& drift, const ScalarField& initial,
                                     double horizon);

struct CatalogEntry {
  std::string id;
  std::string description;
  VectorField drift;
  ScalarField initial;
};

struct CatalogId {
  std::string id;
  std::string description;
  int dim = 1;
};

/// The built-in drift zoo paired with default initial data. All non-constant
/// data are supported in [-L/2, L/2]^d.
std::vector<CatalogEntry> builtin_examples(double half_width = 3.0);

std::vector<CatalogId> drift_ids();
std::vector<CatalogId> initial_ids();

/// Resolve a catalog id such as "sign", "ou" or "const:0.5".
VectorField make_drift(std::string_view id, double half_width = 3.0);
ScalarField make_initial(std::string_view id, double half_width = 3.0);

/// Smooth cutoff: 1 on [0, 1], 0 on [1.5, inf), C-infinity in between.
double smooth_cutoff(double r);
double smooth_cutoff_derivative(double r);

}  // namespace stochtr
