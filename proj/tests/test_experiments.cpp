#include <regex>

#include "doctest.h"
#include "small_configs.hpp"

using namespace stochtr;
using testing_configs::small;

TEST_SUITE("experiments") {

TEST_CASE("every experiment runs at small size and is reproducible") {
  for (const auto& id : experiment_ids()) {
    CAPTURE(id);
    const ExperimentConfig cfg = small(id);
    const Verdict a = run_experiment(cfg);
    const Verdict b = run_experiment(cfg);
    CHECK(a.experiment == id);
    REQUIRE_FALSE(a.assertions.empty());
    CHECK(a.to_json().dump() == b.to_json().dump());
    for (const auto& t : a.tables) {
      CHECK_FALSE(t.rows.empty());
      for (const auto& row : t.rows) CHECK(row.size() == t.columns.size());
    }
    for (const auto& x : a.assertions) {
      CHECK_FALSE(x.invariant.empty());
      CHECK(std::isfinite(x.measured));
    }
  }
}

TEST_CASE("deterministic experiments pass at small size") {
  for (const char* id : {"commutator-suite", "uniqueness"}) {
    CAPTURE(id);
    const Verdict v = run_experiment(small(id));
    for (const auto& x : v.assertions) {
      CAPTURE(x.name);
      CHECK(x.passed);
    }
  }
}

TEST_CASE("a changed seed changes Monte Carlo output but not the schema") {
  ExperimentConfig c = small("noise-suite");
  const Verdict a = run_experiment(c);
  c.seed += 1;
  const Verdict b = run_experiment(c);
  CHECK(a.to_json().dump() != b.to_json().dump());
  REQUIRE(a.assertions.size() == b.assertions.size());
  for (std::size_t i = 0; i < a.assertions.size(); ++i) CHECK(a.assertions[i].name == b.assertions[i].name);
}

TEST_CASE("negative controls are marked") {
  const Verdict v = run_experiment(small("selection"));
  bool any = false;
  for (const auto& x : v.assertions) any = any || x.negative_control;
  CHECK(any);
}

TEST_CASE("validation lists every problem") {
  ExperimentConfig c = default_config("existence");
  c.cells = 16;
  c.paths = 5;
  c.eps_ladder = {0.1, 0.2};
  try {
    validate(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("field.eps") != std::string::npos);
    CHECK(msg.find("noise.paths") != std::string::npos);
    CHECK(msg.find("strictly decreasing") != std::string::npos);
  }
  CHECK_THROWS_AS(validate(default_config("nope")), ConfigError);
  CHECK_NOTHROW(validate(default_config("meanreg")));
}

TEST_CASE("canonical text and hash") {
  const ExperimentConfig a = default_config("selection");
  ExperimentConfig b = a;
  CHECK(canonical_text(a) == canonical_text(b));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(std::regex_match(config_hash(a), std::regex("[0-9a-f]{16}")));
  b.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.vanish_tol = 2e-6;
  CHECK(config_hash(a) != config_hash(b));
  for (const char* key : {"grid.cells", "noise.seed", "tolerance.", "noise.controls"})
    CHECK(canonical_text(a).find(key) != std::string::npos);
}

TEST_CASE("number formatting is stable") {
  CHECK(format_number(0.1) == format_number(0.1));
  CHECK(std::stod(format_number(0.1)) == 0.1);
  CHECK(std::stod(format_number(1.0 / 3.0)) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(format_number(1.0 / 0.0) == "inf");
}

}  // TEST_SUITE
