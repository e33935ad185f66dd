#include <cstdlib>

#include "doctest.h"

#include "stochtr/noise.hpp"
#include "stochtr/parallel.hpp"

using namespace stochtr;

namespace {

ControlFunction ones(TimeGrid t) { return ControlFunction::constant(t, {1.0, 1.0}, 1, "one"); }

struct ThreadsGuard {
  explicit ThreadsGuard(const char* n) { setenv("STOCHTR_THREADS", n, 1); }
  ~ThreadsGuard() { unsetenv("STOCHTR_THREADS"); }
};

}  // namespace

TEST_SUITE("noise") {

TEST_CASE("paths are reproducible and start at zero") {
  const BrownianPath a = sample_path(42, 64, 1.0), b = sample_path(42, 64, 1.0), c = sample_path(43, 64, 1.0);
  CHECK(a.value(0) == 0.0);
  bool same = true, differ = false;
  for (int k = 0; k < 64; ++k) {
    same = same && a.increment(k) == b.increment(k);
    differ = differ || a.increment(k) != c.increment(k);
  }
  CHECK(same);
  CHECK(differ);
  double s = 0.0;
  for (int k = 0; k < 64; ++k) s += a.increment(k);
  CHECK(a.value(64) == doctest::Approx(s).epsilon(1e-14));
}

TEST_CASE("labelled streams are distinct") {
  CHECK(derive_seed(1, "meanreg") != derive_seed(1, "selection"));
  CHECK(derive_seed(1, "meanreg") != derive_seed(2, "meanreg"));
  CHECK(path_seed(5, 0) != path_seed(5, 1));
}

TEST_CASE("one-step paths have the law of B_T") {
  const double T = 2.0;
  const int M = 100000;
  double s = 0.0, s2 = 0.0;
  for (int m = 0; m < M; ++m) {
    const double b = sample_path(path_seed(99, m), 1, T).value(1);
    s += b;
    s2 += b * b;
  }
  const double mean = s / M, var = s2 / M - mean * mean;
  CHECK(std::abs(mean) <= 4.0 * std::sqrt(T / M));
  CHECK(std::abs(var - T) <= 0.1 * T);
}

TEST_CASE("Brownian covariance E[B_{T/2} B_T] = T/2") {
  const double T = 1.0;
  const int M = 100000;
  double s = 0.0, s2 = 0.0;
  for (int m = 0; m < M; ++m) {
    const BrownianPath p = sample_path(path_seed(7, m), 2, T);
    const double v = p.value(1) * p.value(2);
    s += v;
    s2 += v * v;
  }
  const double mean = s / M, se = std::sqrt((s2 / M - mean * mean) / (M - 1));
  CHECK(std::abs(mean - T / 2) <= 3.0 * se);
}

TEST_CASE("coarsened path keeps the endpoints") {
  const BrownianPath p = sample_path(3, 64, 1.0);
  const BrownianPath c = coarsen(p, 8);
  CHECK(c.steps() == 8);
  for (int k = 0; k <= 8; ++k) CHECK(c.value(k) == doctest::Approx(p.value(8 * k)).epsilon(1e-13));
  CHECK_THROWS_AS(coarsen(p, 3), GridMismatch);
}

TEST_CASE("stochastic exponential closed cases") {
  const TimeGrid t{1.0, 2};
  SUBCASE("zero control gives one") {
    const auto F = exponential_of(ControlFunction::constant(t, {0, 0}), sample_path(1, 2, 1.0));
    for (double v : F.values) CHECK(v == 1.0);
  }
  SUBCASE("unit control on a path returning to zero") {
    const BrownianPath p(1, t, {0.3, -0.3}, 0);
    CHECK(exponential_of(ones(t), p).terminal() == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  }
}

TEST_CASE("SDE residual") {
  SUBCASE("vanishes for zero control") {
    const TimeGrid t{1.0, 16};
    CHECK(verify_exponential_sde(ControlFunction::constant(t, {0, 0}), sample_path(5, 16, 1.0)) == 0.0);
  }
  SUBCASE("single step against both closed forms") {
    const TimeGrid t{1.0, 1};
    const BrownianPath p = sample_path(11, 1, 1.0);
    const double db = p.increment(0);
    const double expected = std::abs(std::exp(db - 0.5) - (1.0 + db));
    CHECK(verify_exponential_sde(ones(t), p) == doctest::Approx(expected).epsilon(1e-13));
  }
  SUBCASE("RMS halves per fourfold refinement") {
    std::vector<double> rms;
    for (int K : {64, 256, 1024}) rms.push_back(sde_residual_rms(ones({1.0, K}), 1000, 17));
    for (std::size_t i = 1; i < rms.size(); ++i) {
      const double r = rms[i] / rms[i - 1];
      CHECK(r >= 0.5 / 1.5);
      CHECK(r <= 0.5 * 1.5);
    }
  }
}

TEST_CASE("Ito integral") {
  const BrownianPath p = sample_path(8, 32, 1.0);
  CHECK(ito_integral(std::vector<double>(32, 0.0), p) == 0.0);
  CHECK(ito_integral(std::vector<double>(32, 1.0), p) == doctest::Approx(p.value(32)).epsilon(1e-13));

  // Isometry for Y_k = B_{t_k}: E[(int B dB)^2] = E[sum B_k^2 dt].
  const int M = 100000, K = 16;
  double a = 0, a2 = 0, b = 0, b2 = 0;
  for (int m = 0; m < M; ++m) {
    const BrownianPath q = sample_path(path_seed(21, m), K, 1.0);
    std::vector<double> y(K);
    double energy = 0.0;
    for (int k = 0; k < K; ++k) {
      y[k] = q.value(k);
      energy += y[k] * y[k] * q.dt();
    }
    const double i2 = std::pow(ito_integral(y, q), 2);
    a += i2;
    a2 += i2 * i2;
    b += energy;
    b2 += energy * energy;
  }
  const double ma = a / M, mb = b / M;
  const double se = std::sqrt((a2 / M - ma * ma) / M + (b2 / M - mb * mb) / M);
  CHECK(std::abs(ma - mb) <= 3.0 * se);
}

TEST_CASE("exponential means equal one and weights stay positive") {
  const TimeGrid t{1.0, 16};
  for (const char* spec : {"zero", "one", "switch"}) {
    const auto h = parse_control(spec, t);
    const auto means = exponential_means(h, 100000, 2024);
    REQUIRE(means.size() == 17u);
    for (const auto& e : means) CHECK(std::abs(e.mean - 1.0) <= 4.0 * e.std_error + 1e-15);
  }
  for (int m = 0; m < 200; ++m)
    for (double v : exponential_of(parse_control("switch", t), sample_path(m, 16, 1.0)).values) CHECK(v > 0.0);
}

TEST_CASE("B-F identity") {
  const TimeGrid t{1.0, 16};
  const auto brownian = [](const BrownianPath& p) {
    std::vector<double> y(p.steps());
    for (int k = 0; k < p.steps(); ++k) y[k] = p.value(k);
    return y;
  };
  SUBCASE("zero process") {
    const auto r = verify_bf_identity([](const BrownianPath& p) { return std::vector<double>(p.steps(), 0.0); },
                                      ones(t), 1000, 3);
    CHECK(r.lhs.mean == 0.0);
    CHECK(r.rhs.mean == 0.0);
  }
  SUBCASE("zero control: right side vanishes, left side centred") {
    const auto r = verify_bf_identity(brownian, ControlFunction::constant(t, {0, 0}), 100000, 4);
    CHECK(r.rhs.mean == 0.0);
    CHECK(std::abs(r.lhs.mean) <= 3.0 * r.lhs.std_error);
  }
  SUBCASE("unit control, Y = B") {
    const auto r = verify_bf_identity(brownian, ones(t), 100000, 5);
    CHECK(r.overlap(3.0));
    // E[B_s F_T] = s, so the right side is sum_k t_k dt.
    double closed = 0.0;
    for (int k = 0; k < 16; ++k) closed += t.time(k) * t.dt();
    CHECK(std::abs(r.rhs.mean - closed) <= 3.0 * r.rhs.std_error);
  }
}

TEST_CASE("estimators do not depend on the worker count") {
  const auto h = parse_control("switch", {1.0, 8});
  std::vector<Estimate> one, three;
  {
    ThreadsGuard g("1");
    one = exponential_means(h, 5000, 9);
  }
  {
    ThreadsGuard g("3");
    three = exponential_means(h, 5000, 9);
  }
  for (std::size_t k = 0; k < one.size(); ++k) {
    CHECK(one[k].mean == three[k].mean);
    CHECK(one[k].std_error == three[k].std_error);
  }
}

TEST_CASE("block reduction merges in a fixed order") {
  // Floating-point sums are order dependent; the reduction must not be.
  auto run = [] {
    return block_reduce<double>(
        1000, 7, [] { return 0.0; },
        [](std::size_t b, std::size_t e, double& acc) {
          for (std::size_t i = b; i < e; ++i) acc += 1.0 / (1.0 + static_cast<double>(i) * 0.37);
        },
        [](double& a, const double& b) { a += b; });
  };
  double first;
  {
    ThreadsGuard g("1");
    first = run();
  }
  ThreadsGuard g("4");
  CHECK(run() == first);
}

TEST_CASE("control parsing") {
  const TimeGrid t{1.0, 8};
  const auto s = parse_control("switch", t);
  CHECK(s.value(0) == 1.0);
  CHECK(s.value(7) == -1.0);
  const auto custom = parse_control("0:2,0.5:-3", t);
  CHECK(custom.value(3) == 2.0);
  CHECK(custom.value(4) == -3.0);
  CHECK(custom.integral(8)[0] == doctest::Approx(-0.5));
  CHECK_THROWS_AS(parse_control("0:x", t), ConfigError);
}

}  // TEST_SUITE
