#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "small_configs.hpp"

#include "stochtr/cli.hpp"

using namespace stochtr;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "stochtr");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  // CLI output is not part of what these tests check.
  std::ostringstream sink;
  auto* old_out = std::cout.rdbuf(sink.rdbuf());
  auto* old_err = std::cerr.rdbuf(sink.rdbuf());
  const int code = cli_main(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("stochtr-test-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("canonical text parses back to itself") {
  for (const auto& id : experiment_ids()) {
    CAPTURE(id);
    const ExperimentConfig c = testing_configs::small(id);
    const ExperimentConfig back = parse_config(canonical_text(c));
    CHECK(canonical_text(back) == canonical_text(c));
  }
}

TEST_CASE("every listed key is accepted and reaches the canonical text") {
  const ExperimentConfig base = default_config("selection");
  const std::string text = canonical_text(base);
  for (const auto& key : setting_keys()) {
    CAPTURE(key);
    const auto at = text.find(key + " = ");
    REQUIRE(at != std::string::npos);
    const auto start = at + key.size() + 3;
    const std::string value = text.substr(start, text.find('\n', start) - start);
    ExperimentConfig c = base;
    CHECK_NOTHROW(apply_setting(c, key, value));
    CHECK(canonical_text(c) == text);
  }
  ExperimentConfig c = base;
  CHECK_THROWS_AS(apply_setting(c, "grid.cellz", "3"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "grid.cells", "many"), ConfigError);
}

TEST_CASE("sections, comments and qualified keys") {
  const ExperimentConfig c = parse_config(
      "# comment\n[grid]\ncells = 300  # trailing\nsteps=64\n[noise]\nseed = 7\ncontrols = zero;0:1,0.5:-1\n"
      "field.drift = ou, sign\n",
      std::string("uniqueness"));
  CHECK(c.experiment == "uniqueness");
  CHECK(c.cells == 300);
  CHECK(c.steps == 64);
  CHECK(c.seed == 7u);
  CHECK(c.controls == std::vector<std::string>{"zero", "0:1,0.5:-1"});
  CHECK(c.drifts == std::vector<std::string>{"ou", "sign"});
  try {
    parse_config("[grid]\ncells = x\nbogus = 1\nno equals sign\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
  }
}

TEST_CASE("CSV quoting") {
  Table t{"t", {"a", "b"}, {{"1", "x,y"}, {"2", "say \"hi\""}}};
  CHECK(to_csv(t) == "a,b\n1,\"x,y\"\n2,\"say \"\"hi\"\"\"\n");
}

TEST_CASE("exit codes and output directories") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "small.cfg";
  write(cfg, canonical_text(testing_configs::small("commutator-suite")));

  SUBCASE("usage and config errors write nothing") {
    CHECK(run_cli({"run"}) == 2);
    CHECK(run_cli({"frobnicate"}) == 2);
    CHECK(run_cli({"run", "nope", "--out", (tmp.path / "x").string()}) == 2);
    CHECK(run_cli({"run", "commutator-suite", cfg.string(), "--set", "grid.cells=abc", "--out",
                   (tmp.path / "x").string()}) == 2);
    CHECK(run_cli({"run", "commutator-suite", (tmp.path / "missing.cfg").string(), "--out",
                   (tmp.path / "x").string()}) == 2);
    CHECK_FALSE(fs::exists(tmp.path / "x"));
    CHECK(run_cli({"validate", "commutator-suite", cfg.string()}) == 0);
    CHECK(run_cli({"list"}) == 0);
  }
  SUBCASE("a passing run publishes a complete directory") {
    const fs::path out = tmp.path / "run";
    REQUIRE(run_cli({"run", "commutator-suite", cfg.string(), "--out", out.string()}) == 0);
    for (const char* f : {"config.cfg", "verdict.json", "manifest.json", "commutator_ladder.csv"})
      CHECK(fs::exists(out / f));
    const auto verdict = nlohmann::json::parse(slurp(out / "verdict.json"));
    CHECK(verdict["config_hash"] == config_hash(testing_configs::small("commutator-suite")));
    // the stored config reproduces the hash
    CHECK(config_hash(load_config(out / "config.cfg")) == verdict["config_hash"]);
    for (const auto& e : fs::directory_iterator(tmp.path))
      CHECK(e.path().filename().string().find(".tmp-") == std::string::npos);
  }
  SUBCASE("failing assertions exit with 1") {
    CHECK(run_cli({"run", "commutator-suite", cfg.string(), "--set", "tolerance.halving=0.001", "--out",
                   (tmp.path / "fail").string()}) == 1);
    CHECK(fs::exists(tmp.path / "fail" / "verdict.json"));
  }
  SUBCASE("reruns are byte-identical apart from the manifest timestamp") {
    const fs::path out = tmp.path / "again";
    REQUIRE(run_cli({"run", "noise-suite", "--set", "noise.paths=200", "--set", "noise.sde_paths=50", "--grid",
                     "64x32", "--out", out.string()}) <= 1);
    std::map<std::string, std::string> first;
    for (const auto& e : fs::directory_iterator(out)) first[e.path().filename().string()] = slurp(e.path());
    REQUIRE(run_cli({"run", "noise-suite", "--set", "noise.paths=200", "--set", "noise.sde_paths=50", "--grid",
                     "64x32", "--out", out.string()}) <= 1);
    std::size_t seen = 0;
    for (const auto& e : fs::directory_iterator(out)) {
      const std::string name = e.path().filename().string();
      ++seen;
      REQUIRE(first.count(name) == 1);
      if (name == "manifest.json") {
        auto a = nlohmann::json::parse(first[name]), b = nlohmann::json::parse(slurp(e.path()));
        a.erase("timestamp");
        b.erase("timestamp");
        CHECK(a == b);
      } else {
        CHECK(first[name] == slurp(e.path()));
      }
    }
    CHECK(seen == first.size());
  }
}

}  // TEST_SUITE
