#include "doctest.h"
#include "oracles.hpp"

#include "stochtr/commutator.hpp"

using namespace stochtr;

namespace {

double gauss_slope(double x) { return std::abs(x) <= 1.5 ? -x / 0.09 * std::exp(-x * x / 0.18) : 0.0; }

double sign_drift(double x) { return std::abs(x) <= 1.0 ? (x > 0) - (x < 0) : 0.0; }

/// Continuous commutator of sign against the Gaussian at x.
double sign_gauss_commutator(double x, double eps) {
  const auto rho = oracle::bump_kernel(eps);
  const int n = 200000;
  // split the second integral at the jump y = x
  const auto inner = [&](double y) { return rho(y) * sign_drift(x - y) * gauss_slope(x - y); };
  const double lead = sign_drift(x) * oracle::trapezoid([&](double y) { return rho(y) * gauss_slope(x - y); }, -eps, eps, n);
  double flux;
  if (std::abs(x) < eps)
    flux = oracle::trapezoid(inner, -eps, x, n) + oracle::trapezoid(inner, x, eps, n);
  else
    flux = oracle::trapezoid(inner, -eps, eps, n);
  return lead - flux;
}

VectorField scaled(const VectorField& f, double c) {
  VectorField::Spec s;
  s.id = "scaled";
  s.dim = f.dim();
  s.half_width = f.half_width();
  s.eval = [f, c](double t, const Point& x) {
    const Point v = f(t, x);
    return Point{c * v[0], c * v[1]};
  };
  s.sup_bound = std::abs(c) * f.sup_bound();
  return VectorField(s);
}

}  // namespace

TEST_SUITE("commutator") {

TEST_CASE("constant field commutes with the mollifier") {
  const Grid g(1, 3.0, 1024);
  const auto r = compute_commutator(make_drift("const:0.7"), make_initial("gauss"), Mollifier(MollifierKind::Bump, 0.1), g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(r.values[i]) < 1e-12);
  const Grid g2(2, 1.5, 64);
  VectorField::Spec c;
  c.id = "plane";
  c.dim = 2;
  c.half_width = 1.5;
  c.eval = [](double, const Point&) { return Point{0.3, -0.2}; };
  c.sup_bound = 0.4;
  const auto r2 = compute_commutator(VectorField(c), make_initial("gauss2", 1.5),
                                     Mollifier(MollifierKind::TruncatedGaussian, 0.2, 2), g2);
  for (std::size_t i = 0; i < g2.size(); ++i) CHECK(std::abs(r2.values[i]) < 1e-12);
}

TEST_CASE("constant data give zero") {
  const Grid g(1, 3.0, 512);
  const auto r = compute_commutator(make_drift("sign"), make_initial("const:2"), Mollifier(MollifierKind::Bump, 0.1), g);
  for (double v : r.values) CHECK(v == 0.0);
}

TEST_CASE("sign drift against the Gaussian matches the continuous commutator") {
  const double eps = 0.1;
  std::vector<double> err;
  for (int cells : {960, 1920, 3840}) {
    const Grid g(1, 3.0, cells);
    const auto r = compute_commutator(make_drift("sign"), make_initial("gauss"), Mollifier(MollifierKind::Bump, eps), g);
    double e = 0.0;
    for (double x : {0.0, 0.05, -0.075, 0.5}) {
      const std::size_t i = static_cast<std::size_t>(std::lround((x + 3.0) / g.spacing()));
      e = std::max(e, std::abs(r.values[i] - sign_gauss_commutator(g.coord(i), eps)));
    }
    err.push_back(e);
  }
  CHECK(err.back() < 2e-2 * std::abs(sign_gauss_commutator(0.05, eps)));
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
}

TEST_CASE("local L1 norm") {
  CommutatorField r;
  r.grid = Grid(1, 3.0, 60);
  r.values.assign(r.grid.size(), -1.0);
  r.valid.assign(r.grid.size(), 1);
  CHECK(l1loc_norm(r, 1.0) == doctest::Approx(2.0));
  r.valid[30] = 0;
  CHECK_THROWS_AS(l1loc_norm(r, 1.0), GridMismatch);
}

TEST_CASE("linear in the field") {
  const Grid g(1, 3.0, 512);
  const Mollifier rho(MollifierKind::Bump, 0.1);
  const VectorField f = make_drift("ou");
  const auto a = compute_commutator(f, make_initial("gauss"), rho, g);
  const auto b = compute_commutator(scaled(f, -2.5), make_initial("gauss"), rho, g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(b.values[i] == doctest::Approx(-2.5 * a.values[i]).epsilon(1e-12));
}

TEST_CASE("width ladder: the commutator vanishes for a Lipschitz field") {
  CommutatorStudy s{make_drift("ou"), make_initial("gauss")};
  const CommutatorTable t = convergence_study(s);
  REQUIRE(t.rows.size() == 4u);
  CHECK(t.finite);
  CHECK(t.max_successive_ratio < 1.0);
  CHECK(t.last_over_first < 0.2);
  for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(t.rows[i].width == s.ladder[i]);
}

TEST_CASE("bad inputs") {
  CHECK_THROWS_AS(compute_commutator(make_drift("ou"), make_initial("gauss"), Mollifier(MollifierKind::Bump, 0.01),
                                     Grid(1, 3.0, 512)),
                  UnresolvedMollifier);
  CommutatorStudy s{make_drift("ou"), make_initial("gauss")};
  s.ladder = {0.1, 0.2};
  CHECK_THROWS_AS(convergence_study(s), ConfigError);
  s.ladder = {0.2, 0.1};
  s.radius = 2.9;
  CHECK_THROWS_AS(convergence_study(s), ConfigError);
}

}  // TEST_SUITE
