#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stochtr/cli.hpp"

namespace py = pybind11;
using namespace stochtr;

namespace {

py::array_t<double> rows(const std::vector<GridFunction>& v) {
  const std::size_t n = v.empty() ? 0 : v.front().size();
  py::array_t<double> out({v.size(), n});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t k = 0; k < v.size(); ++k)
    for (std::size_t i = 0; i < n; ++i) a(k, i) = v[k][i];
  return out;
}

py::array_t<double> vec(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<double> nodes(const Grid& g) {
  if (g.dim() == 1) {
    std::vector<double> x(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) x[i] = g.coord(i);
    return vec(x);
  }
  py::array_t<double> out({g.size(), std::size_t{2}});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point p = g.node(i);
    a(i, 0) = p[0];
    a(i, 1) = p[1];
  }
  return out;
}

PreparedFields fields(const std::string& drift, const std::string& initial, const std::string& mollifier, double eps,
                      double half_width) {
  return prepare_fields(drift, initial, parse_mollifier_kind(mollifier), eps, half_width);
}

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stochastic transport experiments: characteristics, Monte Carlo means, solvers and verdicts";
  m.attr("__version__") = library_version();

  // Translators run newest first, so the derived type is registered last.
  py::register_exception<Error>(m, "StochtrError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("experiments", &experiment_ids, "Experiment ids accepted by run_experiment.");
  m.def("catalog", [] {
    std::ostringstream s;
    print_catalog(s);
    return s.str();
  }, "Human-readable list of drift, initial-data, mollifier and control ids.");

  m.def("brownian_path", [](std::uint64_t seed, int steps, double horizon, int dim) {
    const BrownianPath p = sample_path(seed, steps, horizon, dim);
    std::vector<double> b;
    for (int k = 0; k <= steps; ++k)
      for (int a = 0; a < dim; ++a) b.push_back(p.value(k, a));
    py::array_t<double> out = vec(b);
    if (dim == 2) out = out.reshape({steps + 1, 2});
    return out;
  }, py::arg("seed"), py::arg("steps"), py::arg("horizon") = 1.0, py::arg("dim") = 1,
        "B at the K + 1 grid times of one seeded path.");

  m.def("exponential_means", [](const std::string& control, int steps, double horizon, std::size_t paths,
                                std::uint64_t seed) {
    const auto est = exponential_means(parse_control(control, {horizon, steps}), paths, seed);
    std::vector<double> mean, se;
    for (const auto& e : est) {
      mean.push_back(e.mean);
      se.push_back(e.std_error);
    }
    return py::make_tuple(vec(mean), vec(se));
  }, py::arg("control"), py::arg("steps"), py::arg("horizon") = 1.0, py::arg("paths") = 10000,
        py::arg("seed") = 1, "Monte Carlo mean and standard error of the stochastic exponential at every step.");

  m.def("transport", [](const std::string& drift, const std::string& initial, double eps, int cells, int steps,
                        double horizon, std::uint64_t seed, const std::string& mollifier, double half_width) {
    const PreparedFields f = fields(drift, initial, mollifier, eps, half_width);
    const Grid grid(f.drift.dim(), half_width, cells);
    const BrownianPath p = sample_path(seed, steps, horizon, f.drift.dim());
    const TransportSample u = transport_solution(f.initial, solve_forward(f.drift, p, grid), grid);
    return py::make_tuple(nodes(grid), rows(u.values));
  }, py::arg("drift"), py::arg("initial") = "gauss", py::arg("eps") = 0.1, py::arg("cells") = 256,
        py::arg("steps") = 128, py::arg("horizon") = 1.0, py::arg("seed") = 1, py::arg("mollifier") = "bump",
        py::arg("half_width") = 3.0,
        "Mollified transport solution along one path: (nodes, values[k, i]) for k = 0..K.");

  m.def("estimate_mean", [](const std::string& drift, const std::string& initial, const std::string& control,
                            double eps, int cells, int steps, double horizon, std::size_t paths, std::uint64_t seed,
                            const std::string& mollifier, double half_width) {
    const PreparedFields f = fields(drift, initial, mollifier, eps, half_width);
    const Grid grid(f.drift.dim(), half_width, cells);
    const MeanField r = estimate_V(f.drift, f.initial, parse_control(control, {horizon, steps}, f.drift.dim()),
                                   grid, paths, seed);
    py::dict d;
    d["nodes"] = nodes(grid);
    d["steps"] = r.steps;
    d["values"] = rows(r.values);
    d["errors"] = rows(r.std_errors);
    return d;
  }, py::arg("drift"), py::arg("initial") = "gauss", py::arg("control") = "zero", py::arg("eps") = 0.1,
        py::arg("cells") = 128, py::arg("steps") = 64, py::arg("horizon") = 1.0, py::arg("paths") = 1000,
        py::arg("seed") = 1, py::arg("mollifier") = "bump", py::arg("half_width") = 3.0,
        "Monte Carlo estimate of E[u F] with standard errors at the default snapshots.");

  m.def("solve_mean_equation", [](const std::string& drift, const std::string& initial, const std::string& control,
                                  double eps, int cells, int steps, double horizon, const std::string& mollifier,
                                  double half_width) {
    const PreparedFields f = fields(drift, initial, mollifier, eps, half_width);
    ParabolicProblem p{f.drift, parse_control(control, {horizon, steps}, f.drift.dim()), f.initial,
                       Grid(f.drift.dim(), half_width, cells)};
    const ParabolicSolution s = solve_parabolic(p);
    const EnergyReport e = energy_report(s);
    py::dict d;
    d["nodes"] = nodes(p.grid);
    d["values"] = rows(s.field.values);
    d["energy"] = vec(s.energy);
    d["gradient_energy"] = vec(s.gradient_energy);
    d["max_principle_ok"] = s.max_principle_ok;
    d["energy_constant"] = e.measured_constant;
    d["predicted_constant"] = e.predicted_constant;
    return d;
  }, py::arg("drift"), py::arg("initial") = "gauss", py::arg("control") = "zero", py::arg("eps") = 0.1,
        py::arg("cells") = 128, py::arg("steps") = 64, py::arg("horizon") = 1.0, py::arg("mollifier") = "bump",
        py::arg("half_width") = 3.0, "Finite-difference solution of the mean equation with energy bookkeeping.");

  m.def("commutator_ladder", [](const std::string& drift, const std::string& data, std::vector<double> ladder,
                                const std::string& mollifier, double radius) {
    CommutatorStudy s{make_drift(drift), make_initial(data)};
    s.kind = parse_mollifier_kind(mollifier);
    s.ladder = std::move(ladder);
    s.radius = radius;
    std::vector<std::pair<double, double>> out;
    for (const auto& r : convergence_study(s).rows) out.emplace_back(r.width, r.norm);
    return out;
  }, py::arg("drift"), py::arg("data") = "gauss", py::arg("ladder") = std::vector<double>{0.2, 0.1, 0.05, 0.025},
        py::arg("mollifier") = "bump", py::arg("radius") = 1.5, "L1(K) norms of the commutator down a width ladder.");

  m.def("default_config", [](const std::string& name) { return canonical_text(default_config(name)); },
        py::arg("experiment"), "Canonical config text with the default sizes of one experiment.");
  m.def("config_hash", [](const std::string& text) { return config_hash(parse_config(text)); },
        py::arg("config_text"));
  m.def("run_experiment", [](const std::string& name, const std::map<std::string, std::string>& settings) {
    ExperimentConfig cfg = default_config(name);
    for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
    Verdict v;
    {
      py::gil_scoped_release release;
      v = run_experiment(cfg);
    }
    return to_python(v.to_json());
  }, py::arg("experiment"), py::arg("settings") = std::map<std::string, std::string>{},
        "Run one experiment with section.key overrides and return its verdict as a dict.");
}
