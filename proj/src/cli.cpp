#include "stochtr/cli.hpp"

#include <unistd.h>

#include <boost/version.hpp>
#include <charconv>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "stochtr/errors.hpp"
#include "stochtr/field.hpp"
#include "stochtr/noise.hpp"

namespace stochtr {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double to_double(const std::string& s, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ConfigError(key + ": '" + s + "' is not a number");
  return v;
}

template <class Int>
Int to_int(const std::string& s, const std::string& key) {
  Int v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError(key + ": '" + s + "' is not a non-negative integer");
  return v;
}

std::vector<double> to_doubles(const std::string& s, const std::string& key) {
  std::vector<double> v;
  for (const auto& part : split(s, ',')) v.push_back(to_double(part, key));
  return v;
}

std::vector<int> to_ints(const std::string& s, const std::string& key) {
  std::vector<int> v;
  for (const auto& part : split(s, ',')) v.push_back(to_int<int>(part, key));
  return v;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    m["experiment.name"] = [](auto& c, auto& v, auto&) { c.experiment = v; };
    m["field.drift"] = [](auto& c, auto& v, auto&) { c.drifts = split(v, ','); };
    m["field.initial"] = [](auto& c, auto& v, auto&) { c.initial = v; };
    m["field.mollifier"] = [](auto& c, auto& v, auto&) { c.mollifier = parse_mollifier_kind(v); };
    m["field.second_mollifier"] = [](auto& c, auto& v, auto&) { c.second_mollifier = parse_mollifier_kind(v); };
    m["field.eps"] = [](auto& c, auto& v, auto& k) { c.eps = to_double(v, k); };
    m["field.eps_ladder"] = [](auto& c, auto& v, auto& k) { c.eps_ladder = to_doubles(v, k); };
    m["grid.half_width"] = [](auto& c, auto& v, auto& k) { c.half_width = to_double(v, k); };
    m["grid.cells"] = [](auto& c, auto& v, auto& k) { c.cells = to_int<int>(v, k); };
    m["grid.steps"] = [](auto& c, auto& v, auto& k) { c.steps = to_int<int>(v, k); };
    m["grid.horizon"] = [](auto& c, auto& v, auto& k) { c.horizon = to_double(v, k); };
    m["noise.paths"] = [](auto& c, auto& v, auto& k) { c.paths = to_int<std::size_t>(v, k); };
    m["noise.seed"] = [](auto& c, auto& v, auto& k) { c.seed = to_int<std::uint64_t>(v, k); };
    m["noise.controls"] = [](auto& c, auto& v, auto&) { c.controls = split(v, ';'); };
    m["noise.sde_steps"] = [](auto& c, auto& v, auto& k) { c.sde_steps = to_ints(v, k); };
    m["noise.sde_paths"] = [](auto& c, auto& v, auto& k) { c.sde_paths = to_int<std::size_t>(v, k); };
    m["expectation.probes"] = [](auto& c, auto& v, auto& k) { c.probes = to_int<int>(v, k); };
    m["expectation.residual_steps"] = [](auto& c, auto& v, auto& k) { c.residual_steps = to_ints(v, k); };
    m["expectation.residual_paths"] = [](auto& c, auto& v, auto& k) {
      c.residual_paths = to_int<std::size_t>(v, k);
    };
    m["commutator.ladder"] = [](auto& c, auto& v, auto& k) { c.commutator_ladder = to_doubles(v, k); };
    m["commutator.radius"] = [](auto& c, auto& v, auto& k) { c.compact_radius = to_double(v, k); };
    m["tolerance.k_sigma"] = [](auto& c, auto& v, auto& k) { c.k_sigma = to_double(v, k); };
    m["tolerance.ci_sigma"] = [](auto& c, auto& v, auto& k) { c.ci_sigma = to_double(v, k); };
    m["tolerance.scheme_safety"] = [](auto& c, auto& v, auto& k) { c.scheme_safety = to_double(v, k); };
    m["tolerance.halving"] = [](auto& c, auto& v, auto& k) { c.halving = to_double(v, k); };
    m["tolerance.min_order"] = [](auto& c, auto& v, auto& k) { c.min_order = to_double(v, k); };
    m["tolerance.negative_factor"] = [](auto& c, auto& v, auto& k) { c.negative_factor = to_double(v, k); };
    m["tolerance.ratio_cap"] = [](auto& c, auto& v, auto& k) { c.ratio_cap = to_double(v, k); };
    m["tolerance.vanish_tol"] = [](auto& c, auto& v, auto& k) { c.vanish_tol = to_double(v, k); };
    return m;
  }();
  return table;
}

struct Line {
  int number;
  std::string key;
  std::string value;
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::string divergence_flag(const VectorField& b) {
  switch (b.divergence().kind) {
    case DivergenceKind::Analytic: return "analytic";
    case DivergenceKind::FiniteDifference: return "finite-difference";
    case DivergenceKind::Distributional: return "distributional";
  }
  return "?";
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown key '" + key + "'");
  try {
    it->second(cfg, trim(value), key);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::vector<std::string> setting_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

ExperimentConfig parse_config(const std::string& text, const std::optional<std::string>& experiment) {
  std::vector<Line> lines;
  std::vector<std::string> problems;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  for (int n = 1; std::getline(in, raw); ++n) {
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') {
        problems.push_back("line " + std::to_string(n) + ": unterminated section header");
        continue;
      }
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(n) + ": expected 'key = value'");
      continue;
    }
    std::string key = trim(s.substr(0, eq));
    if (key.find('.') == std::string::npos) {
      if (section.empty()) {
        problems.push_back("line " + std::to_string(n) + ": key '" + key + "' outside any section");
        continue;
      }
      key = section + "." + key;
    }
    lines.push_back({n, key, trim(s.substr(eq + 1))});
  }

  std::string name = experiment.value_or("");
  for (const auto& l : lines)
    if (l.key == "experiment.name" && !experiment) name = l.value;
  if (name.empty()) problems.push_back("no experiment named (experiment.name)");

  ExperimentConfig cfg = default_config(name);
  for (const auto& l : lines) {
    if (l.key == "experiment.name") continue;
    try {
      apply_setting(cfg, l.key, l.value);
    } catch (const ConfigError& e) {
      problems.push_back("line " + std::to_string(l.number) + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, const std::optional<std::string>& experiment) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), experiment);
}

std::string library_version() { return "1.0.0"; }

nlohmann::json RunManifest::to_json() const {
  return {{"config_path", config_path},
          {"config_hash", config_hash},
          {"output_dir", output_dir},
          {"timestamp", timestamp},
          {"versions", versions}};
}

std::string to_csv(const Table& table) {
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + field(table.columns[i]);
  out += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + field(row[i]);
    out += "\n";
  }
  return out;
}

RunResult run_to_directory(const ExperimentConfig& cfg, const fs::path& out, const std::string& config_path) {
  validate(cfg);
  RunResult r{run_experiment(cfg), {}, out};

  r.manifest.config_path = config_path;
  r.manifest.config_hash = config_hash(cfg);
  r.manifest.output_dir = out.string();
  r.manifest.timestamp = utc_timestamp();
  r.manifest.versions = {{"stochtr", library_version()},
                         {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                         {"cli11", CLI11_VERSION},
                         {"boost", BOOST_LIB_VERSION}};

  const fs::path parent = out.has_parent_path() ? out.parent_path() : fs::path(".");
  fs::create_directories(parent);
  const fs::path tmp = parent / ("." + out.filename().string() + ".tmp-" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  fs::create_directory(tmp);
  try {
    write_file(tmp / "config.cfg", canonical_text(cfg));
    nlohmann::json verdict = r.verdict.to_json();
    verdict["config_hash"] = r.manifest.config_hash;
    write_file(tmp / "verdict.json", verdict.dump(2) + "\n");
    for (const auto& t : r.verdict.tables) write_file(tmp / (t.name + ".csv"), to_csv(t));
    write_file(tmp / "manifest.json", r.manifest.to_json().dump(2) + "\n");

    const fs::path old = parent / ("." + out.filename().string() + ".old-" + std::to_string(::getpid()));
    const bool replacing = fs::exists(out);
    if (replacing) fs::rename(out, old);
    fs::rename(tmp, out);
    if (replacing) fs::remove_all(old);
  } catch (...) {
    fs::remove_all(tmp);
    throw;
  }
  return r;
}

void print_catalog(std::ostream& os) {
  os << "drifts (id, dim, divergence, description):\n";
  for (const auto& d : drift_ids()) {
    const std::string probe = d.id == "const:<c>" ? "const:1" : d.id;
    os << "  " << d.id << "  d=" << d.dim << "  div=" << divergence_flag(make_drift(probe)) << "  "
       << d.description << "\n";
  }
  os << "initial data:\n";
  for (const auto& u : initial_ids()) os << "  " << u.id << "  d=" << u.dim << "  " << u.description << "\n";
  os << "mollifiers:\n";
  for (auto k : {MollifierKind::Bump, MollifierKind::TruncatedGaussian}) os << "  " << to_string(k) << "\n";
  os << "h probes (or a list t:v,t:v of piecewise-constant switches):\n";
  for (const auto& [id, desc] : control_probe_ids()) os << "  " << id << "  " << desc << "\n";
  os << "experiments:\n";
  for (const auto& e : experiment_ids()) os << "  " << e << "\n";
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Seeded experiments for transport equations with multiplicative noise"};
  app.require_subcommand(1);

  std::string experiment, config_path, out, grid, ladder, u0;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<int> steps;
  std::vector<std::string> drifts, sets;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("experiment", experiment, "experiment id (see `list`)")->required();
    sub->add_option("config", config_path, "config file");
    sub->add_option("--seed", seed, "root seed");
    sub->add_option("--paths", paths, "Monte Carlo paths");
    sub->add_option("--grid", grid, "spatial cells, optionally with time steps: NX or NXxK");
    sub->add_option("--steps", steps, "time steps");
    sub->add_option("--eps-ladder", ladder, "comma separated widths, decreasing");
    sub->add_option("--drift", drifts, "drift id (repeatable)");
    sub->add_option("--u0", u0, "initial data id");
    sub->add_option("--set", sets, "section.key=value (repeatable)");
  };
  auto* run = app.add_subcommand("run", "run an experiment and write its output directory");
  add_common(run);
  run->add_option("--out", out, "output directory (default runs/<experiment>)");
  auto* val = app.add_subcommand("validate", "check a config and print its canonical form");
  add_common(val);
  auto* list = app.add_subcommand("list", "list catalog ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    print_catalog(std::cout);
    return 0;
  }

  ExperimentConfig cfg;
  try {
    cfg = config_path.empty() ? default_config(experiment) : load_config(config_path, experiment);
    if (seed) cfg.seed = *seed;
    if (paths) cfg.paths = *paths;
    if (steps) cfg.steps = *steps;
    if (!grid.empty()) {
      const auto x = grid.find('x');
      apply_setting(cfg, "grid.cells", grid.substr(0, x));
      if (x != std::string::npos) apply_setting(cfg, "grid.steps", grid.substr(x + 1));
    }
    if (!ladder.empty()) apply_setting(cfg, "field.eps_ladder", ladder);
    if (!drifts.empty()) cfg.drifts = drifts;
    if (!u0.empty()) cfg.initial = u0;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
      apply_setting(cfg, trim(s.substr(0, eq)), s.substr(eq + 1));
    }
    validate(cfg);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  if (val->parsed()) {
    std::cout << canonical_text(cfg) << "hash = " << config_hash(cfg) << "\n";
    return 0;
  }

  const fs::path dir = out.empty() ? fs::path("runs") / cfg.experiment : fs::path(out);
  try {
    const RunResult r = run_to_directory(cfg, dir, config_path.empty() ? "<defaults>" : config_path);
    for (const auto& a : r.verdict.assertions)
      std::cout << (a.passed ? "PASS " : "FAIL ") << a.name << "  " << format_number(a.measured) << " "
                << a.relation << " " << format_number(a.threshold) << (a.negative_control ? "  [negative]" : "")
                << "\n";
    std::cout << (r.verdict.passed() ? "verdict: pass" : "verdict: fail") << "  -> " << dir.string() << "\n";
    return r.verdict.passed() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace stochtr
