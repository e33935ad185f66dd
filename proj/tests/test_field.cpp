#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "stochtr/field.hpp"

using namespace stochtr;

TEST_SUITE("field") {

TEST_CASE("mollifiers are positive, even and of unit mass") {
  for (auto kind : {MollifierKind::Bump, MollifierKind::TruncatedGaussian}) {
    for (double eps : {0.2, 0.05}) {
      const Mollifier rho(kind, eps);
      if (kind == MollifierKind::Bump) {
        const double mass = oracle::trapezoid([&](double y) { return rho({y, 0.0}); }, -eps, eps, 400000);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
      } else {
        // The truncated kernel jumps at its edge; compare the peak with the
        // closed-form mass of exp(-2 (y/eps)^2) on [-eps, eps].
        const double mass = eps * std::sqrt(std::numbers::pi / 2.0) * std::erf(std::sqrt(2.0));
        CHECK(rho({0.0, 0.0}) == doctest::Approx(1.0 / mass).epsilon(1e-12));
      }
      for (double y : {0.0, 0.3 * eps, 0.7 * eps, 0.99 * eps}) {
        CHECK(rho({y, 0.0}) >= 0.0);
        CHECK(rho({y, 0.0}) == rho({-y, 0.0}));
      }
      CHECK(rho({1.0001 * eps, 0.0}) == 0.0);
      CHECK(rho({-1.5 * eps, 0.0}) == 0.0);
    }
  }
}

TEST_CASE("two-dimensional bump has unit mass") {
  const Mollifier rho(MollifierKind::Bump, 0.1, 2);
  const int n = 800;
  double s = 0.0;
  const double h = 0.2 / n;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) s += rho({-0.1 + i * h, -0.1 + j * h});
  CHECK(s * h * h == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("constant drift is unchanged by mollification") {
  const VectorField b = mollify_field(make_drift("const:0.7"), Mollifier(MollifierKind::Bump, 0.1));
  for (double x : {-2.0, -0.3, 0.0, 0.41, 1.2}) CHECK(b(0.0, {x, 0.0})[0] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("mollified sign drift matches a fine trapezoid oracle") {
  const double eps = 0.1;
  const VectorField b = mollify_field(make_drift("sign"), Mollifier(MollifierKind::Bump, eps));
  CHECK(std::abs(b(0.0, {0.0, 0.0})[0]) < 1e-12);
  const auto rho = oracle::bump_kernel(eps);
  const double x = 0.05;
  // sign(x - y) rho(y): split at the jump y = x.
  const double ref = oracle::trapezoid(rho, -eps, x, 200000) - oracle::trapezoid(rho, x, eps, 200000);
  CHECK(b(0.0, {x, 0.0})[0] == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("divergence of the mollified sign drift at the jump is twice the kernel peak") {
  // d/dx (sign * rho)(0) = 2 rho(0), whether or not the kernel jumps at its edge.
  for (auto kind : {MollifierKind::Bump, MollifierKind::TruncatedGaussian}) {
    const Mollifier rho(kind, 0.1);
    const VectorField b = mollify_field(make_drift("sign"), rho);
    CHECK(b.divergence_at(0.0, {0.0, 0.0}) == doctest::Approx(2.0 * rho({0.0, 0.0})).epsilon(1e-5));
    // Away from the jump, compare with a wide Richardson-extrapolated difference.
    const double x = 0.043, h = 1e-3;
    auto d = [&](double s) { return (b.eval1(0.0, x + s) - b.eval1(0.0, x - s)) / (2.0 * s); };
    const double fd = (4.0 * d(h / 2) - d(h)) / 3.0;
    CHECK(b.divergence_at(0.0, {x, 0.0}) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("gradient of mollified data in two dimensions") {
  for (auto kind : {MollifierKind::Bump, MollifierKind::TruncatedGaussian}) {
    const ScalarField u = mollify_initial(make_initial("gauss2"), Mollifier(kind, 0.2, 2));
    const Point x{0.13, -0.21};
    const double h = 1e-3;
    for (int a = 0; a < 2; ++a) {
      Point xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      const double fd = (u(xp) - u(xm)) / (2.0 * h);
      // The truncated kernel's circular jump is only resolved to about 1e-3
      // by the tensor rule, in both the value and the edge term.
      const double tol = kind == MollifierKind::Bump ? 1e-4 : 5e-3;
      CHECK(u.gradient(x)[a] == doctest::Approx(fd).epsilon(tol));
    }
  }
}

TEST_CASE("mollified step matches a fine trapezoid oracle") {
  const double eps = 0.1;
  const ScalarField u = mollify_initial(make_initial("step"), Mollifier(MollifierKind::Bump, eps));
  CHECK(u({0.0, 0.0}) == doctest::Approx(0.5).epsilon(1e-10));
  const auto rho = oracle::bump_kernel(eps);
  // 1_[0,1](x - y) rho(y) is rho on y <= x for x in (0, 1 - eps).
  const double ref = oracle::trapezoid(rho, -eps, 0.05, 200000);
  CHECK(u({0.05, 0.0}) == doctest::Approx(ref).epsilon(1e-8));
  CHECK(u({0.5, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("indicator of the inner box stays one away from its edge") {
  const ScalarField u = mollify_initial(make_initial("one"), Mollifier(MollifierKind::TruncatedGaussian, 0.1));
  for (double x : {-1.0, 0.0, 1.3}) CHECK(u({x, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hypothesis report flags") {
  const ScalarField u0 = make_initial("gauss");
  SUBCASE("zero drift") {
    const auto r = validate_hypothesis(make_drift("zero"), u0, 1.0);
    CHECK(r.con1_ok);
    CHECK(r.con2_ok);
    CHECK(r.conic_ok);
  }
  SUBCASE("sign drift has a distributional divergence") {
    const auto r = validate_hypothesis(make_drift("sign"), u0, 1.0);
    CHECK(r.con1_ok);
    CHECK_FALSE(r.con2_ok);
    CHECK(r.distributional);
    REQUIRE(!r.atoms.empty());
    double origin_mass = 0.0;
    for (const auto& a : r.atoms)
      if (a.location[0] == 0.0) origin_mass = a.mass;
    CHECK(origin_mass == doctest::Approx(2.0));
  }
  SUBCASE("truncated linear drift: divergence mass 2T") {
    VectorField::Spec s;
    s.id = "trunc-linear";
    s.dim = 1;
    s.half_width = 3.0;
    s.eval = [](double, const Point& x) { return Point{std::abs(x[0]) <= 1.0 ? -x[0] : 0.0, 0.0}; };
    s.sup_bound = 1.0;
    s.divergence.kind = DivergenceKind::Analytic;
    s.divergence.density = [](double, const Point& x) { return std::abs(x[0]) <= 1.0 ? -1.0 : 0.0; };
    s.breakpoints = {-1.0, 1.0};
    const double T = 0.75;
    const auto r = validate_hypothesis(VectorField(s), u0, T);
    CHECK(r.con2_ok);
    CHECK(std::abs(r.divergence_l1 - 2.0 * T) < 1e-6);
  }
}

TEST_CASE("catalog contents") {
  const auto cat = builtin_examples();
  CHECK(cat.size() >= 6);
  bool saw_sign = false;
  for (const auto& e : cat) {
    if (e.id == "sign") {
      saw_sign = true;
      CHECK(e.drift.distributional_divergence());
    }
  }
  CHECK(saw_sign);
  const VectorField ou = make_drift("ou");
  for (double x : {-0.9, -0.2, 0.0, 0.5, 0.99}) CHECK(ou.divergence_at(0.0, {x, 0.0}) == doctest::Approx(-1.0));
}

TEST_CASE("catalog fields respect their sup bounds at random points") {
  std::mt19937_64 gen(7);
  for (const auto& e : builtin_examples()) {
    const int d = e.drift.dim();
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int n = 0; n < 2000; ++n) {
      const Point x{U(gen), d == 2 ? U(gen) : 0.0};
      const Point v = e.drift(0.0, x);
      const double speed = std::sqrt(norm_sq(v, d));
      REQUIRE(std::isfinite(speed));
      CHECK(speed <= e.drift.sup_bound() * (1.0 + 1e-12) + 1e-12);
      CHECK(std::abs(e.initial(x)) <= e.initial.sup_bound() * (1.0 + 1e-12) + 1e-12);
    }
  }
}

TEST_CASE("mollification contracts the sup norm") {
  const Grid g(1, 3.0, 600);
  for (const char* id : {"ou", "sign", "compress", "sqrtsign", "const:0.5"}) {
    const VectorField b = make_drift(id);
    const VectorField be = mollify_field(b, Mollifier(MollifierKind::Bump, 0.1));
    const auto raw = sample(b, 0.0, g), smooth = sample(be, 0.0, g);
    double s_raw = 0, s_smooth = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      s_raw = std::max(s_raw, std::abs(raw[i]));
      s_smooth = std::max(s_smooth, std::abs(smooth[i]));
    }
    CHECK(s_smooth <= s_raw + 1e-12);
  }
}

TEST_CASE("mollification converges for continuous data") {
  const Grid g(1, 3.0, 600);
  for (const char* id : {"ou", "sqrtsign"}) {
    const VectorField b = make_drift(id);
    const auto raw = sample(b, 0.0, g);
    double prev = 1e300;
    for (double eps : {0.2, 0.1, 0.05, 0.025}) {
      const auto s = sample(mollify_field(b, Mollifier(MollifierKind::Bump, eps)), 0.0, g);
      double err = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) err = std::max(err, std::abs(s[i] - raw[i]));
      CHECK(err < prev);
      prev = err;
    }
  }
}

TEST_CASE("odd data stay odd") {
  for (auto kind : {MollifierKind::Bump, MollifierKind::TruncatedGaussian}) {
    const Mollifier rho(kind, 0.1);
    CHECK(std::abs(mollify_field(make_drift("sqrtsign"), rho)(0.0, {0.0, 0.0})[0]) < 1e-12);
    CHECK(std::abs(mollify_initial(make_initial("odd"), rho)({0.0, 0.0})) < 1e-12);
  }
}

TEST_CASE("tabulated field reproduces the direct evaluation") {
  const VectorField b = mollify_field(make_drift("sign"), Mollifier(MollifierKind::Bump, 0.1));
  const VectorField t = tabulate(b, 3.0 / 4096.0);
  for (double x : {-1.3, -0.04, 0.0, 0.013, 0.9}) CHECK(std::abs(t.eval1(0.0, x) - b.eval1(0.0, x)) < 1e-4);
}

TEST_CASE("bad ids and widths are rejected") {
  CHECK_THROWS_AS(make_drift("nope"), ConfigError);
  CHECK_THROWS_AS(Mollifier(MollifierKind::Bump, 0.0), InvalidMollifier);
  CHECK_THROWS_AS(parse_mollifier_kind("box"), ConfigError);
}

}  // TEST_SUITE
