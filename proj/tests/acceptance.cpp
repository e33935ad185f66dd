// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                 run every criterion at full size
//   acceptance --only AC5,AC8  run a subset
//   acceptance --out DIR       keep the full-size run directories under DIR

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "small_configs.hpp"

#include "stochtr/cli.hpp"

using namespace stochtr;
namespace fs = std::filesystem;

namespace {

// Wall-clock limits per criterion, seconds.
constexpr double kNoiseLimit = 60.0;
constexpr double kMeanLimit = 600.0;
constexpr double kCommutatorLimit = 120.0;
constexpr double kSelectionLimit = 900.0;

struct Outcome {
  bool passed = true;
  std::vector<std::string> details;
};

class Runner {
 public:
  explicit Runner(fs::path out) : out_(std::move(out)) {}

  /// Runs (once) the experiment at default size and returns verdict and seconds.
  const std::pair<Verdict, double>& get(const std::string& id) {
    auto it = cache_.find(id);
    if (it != cache_.end()) return it->second;
    const ExperimentConfig cfg = default_config(id);
    const auto start = std::chrono::steady_clock::now();
    Verdict v = out_.empty() ? run_experiment(cfg) : run_to_directory(cfg, out_ / id, "<defaults>").verdict;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return cache_.emplace(id, std::make_pair(std::move(v), secs)).first->second;
  }

 private:
  fs::path out_;
  std::map<std::string, std::pair<Verdict, double>> cache_;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

/// Every assertion of `v` whose name passes `pick` must hold.
void require(Outcome& o, const Verdict& v, const std::function<bool(const std::string&)>& pick) {
  const std::size_t at = o.details.size();
  std::size_t n = 0, bad = 0;
  for (const auto& a : v.assertions) {
    if (!pick(a.name)) continue;
    ++n;
    if (!a.passed) {
      ++bad;
      o.details.push_back(v.experiment + ":" + a.name + " measured " + fmt(a.measured) + " " + a.relation + " " +
                          fmt(a.threshold) + (a.negative_control ? " (negative control)" : ""));
    }
  }
  if (n == 0) o.details.push_back(v.experiment + ": no matching assertions");
  o.passed = o.passed && n > 0 && bad == 0;
  o.details.insert(o.details.begin() + static_cast<std::ptrdiff_t>(at), v.experiment + ": " + std::to_string(n - bad) + "/" + std::to_string(n));
}

void within(Outcome& o, double secs, double limit) {
  o.details.push_back(fmt(secs) + " s (limit " + fmt(limit) + " s)");
  o.passed = o.passed && secs <= limit;
}

bool starts(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }
bool contains(const std::string& s, const std::string& p) { return s.find(p) != std::string::npos; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Files of a run directory, with the manifest timestamp blanked.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string body = slurp(e.path());
    if (e.path().filename() == "manifest.json") {
      auto j = nlohmann::json::parse(body);
      j.erase("timestamp");
      body = j.dump(2);
    }
    files[e.path().filename().string()] = body;
  }
  return files;
}

Outcome reproducibility() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("stochtr-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  for (const auto& id : experiment_ids()) {
    const ExperimentConfig cfg = testing_configs::small(id);
    const fs::path dir = root / id;
    run_to_directory(cfg, dir, "<small>");
    const auto first = snapshot(dir);
    run_to_directory(cfg, dir, "<small>");
    const auto second = snapshot(dir);
    std::size_t differing = 0;
    for (const auto& [name, body] : first) {
      auto it = second.find(name);
      if (it == second.end() || it->second != body) {
        ++differing;
        o.details.push_back(id + ": " + name + " differs");
      }
    }
    if (first.size() != second.size()) ++differing;
    o.passed = o.passed && differing == 0 && first.size() >= 3;
    if (differing == 0) o.details.push_back(id + ": " + std::to_string(first.size()) + " files identical");
  }
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only, out;
  bool verbose = false;
  app.add_option("--only", only, "comma separated criteria, e.g. AC1,AC8");
  app.add_option("--out", out, "keep full-size run directories here");
  app.add_flag("-v,--verbose", verbose, "print per-criterion details");
  CLI11_PARSE(app, argc, argv);

  std::set<std::string> wanted;
  std::stringstream ss(only);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) wanted.insert(tok);

  Runner runner{fs::path(out)};
  using Check = std::function<Outcome()>;
  const std::vector<std::tuple<std::string, std::string, Check>> criteria{
      {"AC1", "stochastic exponential: mean one, SDE residual order 1/2",
       [&] {
         Outcome o;
         const auto& [v, secs] = runner.get("noise-suite");
         require(o, v, [](const std::string& n) { return !starts(n, "bf_"); });
         within(o, secs, kNoiseLimit);
         return o;
       }},
      {"AC2", "B-F identity within overlapping 3-sigma intervals",
       [&] {
         Outcome o;
         const auto& [v, secs] = runner.get("noise-suite");
         require(o, v, [](const std::string& n) { return starts(n, "bf_"); });
         within(o, secs, kNoiseLimit);
         return o;
       }},
      {"AC3", "Monte Carlo V against the parabolic solver",
       [&] {
         Outcome o;
         const auto& [v, secs] = runner.get("meanreg");
         require(o, v, [](const std::string&) { return true; });
         within(o, secs, kMeanLimit);
         return o;
       }},
      {"AC4", "weak residual vanishes at order 1/2; dropped correction fails",
       [&] {
         Outcome o;
         const auto& [v, secs] = runner.get("existence");
         require(o, v, [](const std::string&) { return true; });
         o.details.push_back(fmt(secs) + " s");
         return o;
       }},
      {"AC5", "commutator: constant field vanishes, ladder halves",
       [&] {
         Outcome o;
         const auto& [v, secs] = runner.get("commutator-suite");
         require(o, v, [](const std::string&) { return true; });
         within(o, secs, kCommutatorLimit);
         return o;
       }},
      {"AC6", "energy: maximum principle, Gronwall constant, zero data stay zero",
       [&] {
         Outcome o;
         const auto& [v, secs] = runner.get("uniqueness");
         require(o, v, [](const std::string&) { return true; });
         o.details.push_back(fmt(secs) + " s");
         return o;
       }},
      {"AC7", "selection: difference bound at every rung, terminal gap halves",
       [&] {
         Outcome o;
         const auto& [sel, s1] = runner.get("selection");
         require(o, sel, [](const std::string&) { return true; });
         const auto& [con, s2] = runner.get("contrast");
         require(o, con, [](const std::string& n) { return contains(n, "deterministic_floor_recorded"); });
         if (con.measured.count("sign.deterministic_floor_sup"))
           o.details.push_back("deterministic floor " + fmt(con.measured.at("sign.deterministic_floor_sup")));
         within(o, s1 + s2, kSelectionLimit);
         return o;
       }},
      {"AC8", "identical config and seed give byte-identical output", [] { return reproducibility(); }},
  };

  bool all = true;
  for (const auto& [id, what, check] : criteria) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.passed = false;
      o.details.push_back(std::string("error: ") + e.what());
    }
    all = all && o.passed;
    std::cout << id << " " << (o.passed ? "PASS" : "FAIL") << "  " << what << "\n";
    if (verbose || !o.passed)
      for (const auto& d : o.details) std::cout << "    " << d << "\n";
    std::cout.flush();
  }
  return all ? 0 : 1;
}
