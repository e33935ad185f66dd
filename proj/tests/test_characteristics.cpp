#include "doctest.h"

#include "stochtr/characteristics.hpp"

using namespace stochtr;

namespace {

/// b(x) = -x without clipping, for the exact-recursion oracle.
VectorField linear_drift() {
  VectorField::Spec s;
  s.id = "linear";
  s.dim = 1;
  s.half_width = 3.0;
  s.eval = [](double, const Point& x) { return Point{-x[0], 0.0}; };
  s.sup_bound = 3.0;
  s.divergence.density = [](double, const Point&) { return -1.0; };
  return VectorField(s);
}

VectorField smooth(const char* id, double eps, int dim = 1) {
  return mollify_field(make_drift(id), Mollifier(MollifierKind::Bump, eps, dim));
}

ScalarField smooth_u0(const char* id, double eps, int dim = 1) {
  return mollify_initial(make_initial(id), Mollifier(MollifierKind::Bump, eps, dim));
}

}  // namespace

TEST_SUITE("characteristics") {

TEST_CASE("zero and constant drift flows are exact translations") {
  const Grid lattice(1, 3.0, 64);
  const BrownianPath p = sample_path(12, 32, 1.0);
  for (double c : {0.0, 0.4}) {
    const FlowMap f = solve_forward(make_drift(c == 0.0 ? "zero" : "const:0.4"), p, lattice);
    for (int k : {0, 5, 32}) {
      const auto& X = f.at(k);
      for (std::size_t i = 0; i < lattice.size(); ++i)
        CHECK(X[i] == doctest::Approx(lattice.coord(i) + c * p.time().time(k) + p.value(k)).epsilon(1e-12));
      const InverseMap inv = invert_flow(f, k, lattice);
      for (std::size_t i = 0; i < lattice.size(); ++i)
        CHECK(inv.preimages[i] ==
              doctest::Approx(lattice.coord(i) - c * p.time().time(k) - p.value(k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("linear drift follows the discrete OU recursion") {
  const Grid lattice(1, 1.0, 16);
  const BrownianPath p = sample_path(5, 128, 1.0);
  const FlowMap f = solve_forward(linear_drift(), p, lattice, {{128}, 10.0});
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    double x = lattice.coord(i);
    for (int k = 0; k < 128; ++k) x = x * (1.0 - p.dt()) + p.increment(k);
    CHECK(f.at(128)[i] == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("Euler is strongly first order for additive noise") {
  // Reference: the same recursion on a 64x finer grid of each path.
  const int fine = 8192, paths = 200;
  const std::vector<int> coarse{32, 64, 128, 256};
  std::vector<double> err(coarse.size(), 0.0);
  for (int m = 0; m < paths; ++m) {
    const BrownianPath p = sample_path(path_seed(77, m), fine, 1.0);
    double ref = 0.5;
    for (int k = 0; k < fine; ++k) ref = ref * (1.0 - p.dt()) + p.increment(k);
    for (std::size_t c = 0; c < coarse.size(); ++c) {
      const BrownianPath q = coarsen(p, fine / coarse[c]);
      const FlowMap f = solve_forward(linear_drift(), q, Grid(1, 0.5, 2), {{coarse[c]}, 10.0});
      const double e = f.at(coarse[c])[2] - ref;
      err[c] += e * e;
    }
  }
  std::vector<double> dts;
  for (std::size_t c = 0; c < coarse.size(); ++c) {
    err[c] = std::sqrt(err[c] / paths);
    dts.push_back(1.0 / coarse[c]);
  }
  CHECK(log_log_slope(dts, err) >= 0.9);
}

TEST_CASE("smooth one-dimensional flows are monotone") {
  const Grid lattice(1, 3.0, 256);
  for (const char* id : {"ou", "sign", "sqrtsign"}) {
    const FlowMap f = solve_forward(tabulate(smooth(id, 0.1), 3.0 / 4096), sample_path(3, 128, 1.0), lattice);
    for (const auto& X : f.positions)
      for (std::size_t i = 0; i + 1 < X.size(); ++i) CHECK(X[i + 1] >= X[i]);
    CHECK(f.positions.front()[10] == lattice.coord(10));
  }
}

TEST_CASE("round trip through the inverse flow") {
  SUBCASE("d = 1") {
    const Grid lattice(1, 3.0, 256);
    const VectorField b = smooth("ou", 0.1);
    const BrownianPath p = sample_path(44, 64, 1.0);
    const FlowMap f = solve_forward(b, p, lattice, {{64}});
    const Grid eval(1, 1.5, 97);
    const InverseMap inv = invert_flow(f, 64, eval);
    std::vector<double> x = inv.preimages;
    for (int k = 0; k < 64; ++k) euler_step(b, p.time().time(k), p.dt(), {p.increment(k), 0.0}, x, 1, 100.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - eval.coord(i)));
    CHECK(worst <= 2.0 * lattice.spacing());
  }
  SUBCASE("d = 2") {
    const Grid lattice(2, 3.0, 64);
    const VectorField b = smooth("rot2", 0.4, 2);
    const BrownianPath p = sample_path(45, 16, 0.5, 2);
    const FlowMap f = solve_forward(b, p, lattice, {{16}});
    const Grid eval(2, 1.0, 9);
    const InverseMap inv = invert_flow(f, 16, eval);
    std::vector<double> x = inv.preimages;
    for (int k = 0; k < 16; ++k)
      euler_step(b, p.time().time(k), p.dt(), {p.increment(k, 0), p.increment(k, 1)}, x, 2, 100.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < eval.size(); ++i) {
      const Point e = eval.node(i);
      worst = std::max({worst, std::abs(x[2 * i] - e[0]), std::abs(x[2 * i + 1] - e[1])});
    }
    CHECK(worst <= 2.0 * lattice.spacing());
  }
}

TEST_CASE("transport of constant and translated data") {
  const Grid grid(1, 3.0, 256);
  const BrownianPath p = sample_path(9, 64, 1.0);
  SUBCASE("constants are transported to themselves") {
    const TransportSample u = transport_solution(make_initial("const:1"), solve_forward(smooth("sign", 0.1), p, grid), grid);
    for (const auto& v : u.values)
      for (double x : v) CHECK(x == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("constant drift shifts the data") {
    const ScalarField u0 = smooth_u0("gauss", 0.1);
    const TransportSample u = transport_solution(u0, solve_forward(make_drift("const:0.3"), p, grid), grid);
    for (int k : {16, 64}) {
      const double shift = 0.3 * p.time().time(k) + p.value(k);
      for (std::size_t i = 0; i < grid.size(); i += 7)
        CHECK(u.at(k)[i] == doctest::Approx(u0({grid.coord(i) - shift, 0.0})).epsilon(1e-10));
    }
  }
}

TEST_CASE("maximum principle over seeds") {
  const Grid grid(1, 3.0, 256);
  const ScalarField u0 = smooth_u0("odd", 0.1);
  const VectorField b = tabulate(smooth("sign", 0.1), 3.0 / 4096);
  double lo = 0, hi = 0;
  for (double x : sample(u0, grid)) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  for (std::uint64_t s = 0; s < 20; ++s) {
    const TransportSample u = transport_solution(u0, solve_forward(b, sample_path(s, 64, 1.0), grid), grid);
    for (const auto& v : u.values)
      for (double x : v) {
        CHECK(x >= lo - 1e-3);
        CHECK(x <= hi + 1e-3);
      }
  }
}

TEST_CASE("mass is stable under lattice refinement") {
  const VectorField b = tabulate(smooth("sign", 0.1), 3.0 / 4096);
  const ScalarField u0 = smooth_u0("gauss", 0.1);
  const BrownianPath p = sample_path(31, 64, 1.0);
  auto mass = [&](int cells) {
    const Grid g(1, 3.0, cells);
    return g.integrate(transport_solution(u0, solve_forward(b, p, g, {{64}}), g).at(64));
  };
  const double fine = mass(2560);
  const double e256 = std::abs(mass(256) - fine), e512 = std::abs(mass(512) - fine);
  CHECK(e256 <= 5e-3 * std::abs(fine));
  CHECK(e512 <= 0.5 * e256);
}

TEST_CASE("deterministic characteristics") {
  const Grid grid(1, 3.0, 256);
  const TimeGrid time{1.0, 64};
  SUBCASE("constant drift") {
    const ScalarField u0 = smooth_u0("gauss", 0.1);
    const TransportSample u = deterministic_solve(make_drift("const:-0.5"), u0, grid, time, grid, {64});
    for (std::size_t i = 0; i < grid.size(); i += 5)
      CHECK(u.at(64)[i] == doctest::Approx(u0({grid.coord(i) + 0.5, 0.0})).epsilon(1e-10));
  }
  SUBCASE("expanding sign drift keeps odd data zero at the origin") {
    const TransportSample u =
        deterministic_solve(smooth("sign", 0.1), smooth_u0("odd", 0.1), grid, time, grid, {64});
    CHECK(std::abs(u.at(64)[grid.cells() / 2]) < 1e-10);
  }
  SUBCASE("compressive drift folds the lattice at small width") {
    CHECK_THROWS_AS(deterministic_solve(smooth("compress", 0.02), smooth_u0("gauss", 0.1),
                                        Grid(1, 3.0, 2048), TimeGrid{1.0, 8}, grid),
                    NonInvertibleFlow);
    CHECK_NOTHROW(deterministic_solve(smooth("compress", 0.2), smooth_u0("gauss", 0.1), grid, TimeGrid{0.1, 64}, grid));
  }
}

}  // TEST_SUITE
