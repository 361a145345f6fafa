#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "svilab/diagnostics.hpp"
#include "svilab/error.hpp"
#include "svilab/experiment.hpp"

namespace py = pybind11;
using namespace svi;

namespace {

ConfigValue to_config_value(const std::string& key, const py::handle& v) {
  if (py::isinstance<py::bool_>(v)) return v.cast<bool>();
  if (py::isinstance<py::int_>(v) || py::isinstance<py::float_>(v)) return v.cast<double>();
  if (py::isinstance<py::str>(v)) return v.cast<std::string>();
  if (py::isinstance<py::sequence>(v)) {
    const auto seq = v.cast<py::sequence>();
    if (seq.size() > 0 && py::isinstance<py::str>(seq[0])) return v.cast<std::vector<std::string>>();
    return v.cast<std::vector<double>>();
  }
  throw ConfigError(key, "unsupported Python value type");
}

ExperimentConfig make_config(const std::string& text, const py::dict& overrides) {
  ConfigTable table = parse_config_text(text);
  for (const auto& [k, v] : overrides) {
    const auto key = k.cast<std::string>();
    table[key] = to_config_value(key, v);
  }
  return config_from_table(table);
}

std::string bundle_json(const OutputBundle& b) {
  nlohmann::json j;
  j["exit_code"] = b.exit_code;
  j["config_hash"] = b.config_hash;
  j["output_dir"] = b.output_dir;
  j["stages"] = nlohmann::json::array();
  for (const auto& s : b.stages)
    j["stages"].push_back({{"name", s.name}, {"status", s.status}, {"seconds", s.seconds}, {"error", s.error}});
  j["files"] = nlohmann::json::array();
  for (const auto& f : b.files)
    j["files"].push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["reports"] = b.reports.is_null() ? nlohmann::json::object() : b.reports;
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of svilab";

  auto error = py::register_exception<Error>(m, "SvilabError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<OutOfChart>(m, "OutOfChart", error.ptr());
  py::register_exception<InsufficientSurvivors>(m, "InsufficientSurvivors", error.ptr());

  m.def("version", [] { return std::string(code_version()); });

  m.def(
      "canonical_config",
      [](const std::string& text, const py::dict& overrides) {
        return make_config(text, overrides).canonical();
      },
      py::arg("text"), py::arg("overrides") = py::dict());

  m.def(
      "run",
      [](const std::string& text, const py::dict& overrides, const std::string& output_dir,
         int threads) {
        ExperimentConfig cfg = make_config(text, overrides);
        RunOptions o;
        o.threads = threads;
        o.write_files = !output_dir.empty();
        if (o.write_files) cfg.output_dir = output_dir;
        OutputBundle b;
        {
          py::gil_scoped_release release;
          b = run_experiment(cfg, o);
        }
        return bundle_json(b);
      },
      py::arg("text"), py::arg("overrides") = py::dict(), py::arg("output_dir") = "",
      py::arg("threads") = 0, "Runs the pipeline; returns the bundle as JSON text.");

  m.def(
      "kkt",
      [](const std::string& instance) {
        const Instance inst = make_instance(instance);
        return to_json(predicted_covariance(inst.problem, inst.nlp, inst.solution)).dump();
      },
      py::arg("instance") = "two_ball");

  m.def(
      "sfb",
      [](const std::string& instance, long iterations, std::uint64_t seed, double c, double gamma) {
        const Instance inst = make_instance(instance);
        SolverConfig cfg;
        cfg.schedule = StepSchedule(c, gamma);
        cfg.iterations = iterations;
        cfg.seed = seed;
        cfg.record_stride = iterations;
        cfg.record_distances = false;
        Trajectory t;
        {
          py::gil_scoped_release release;
          t = run_sfb(inst.problem, cfg);
        }
        return py::make_tuple(t.final_average, t.final_iterate);
      },
      py::arg("instance") = "two_ball", py::arg("iterations") = 10000, py::arg("seed") = 1,
      py::arg("c") = 1.0, py::arg("gamma") = 0.75,
      "Stochastic forward-backward run; returns (averaged iterate, last iterate).");

  m.def(
      "saa",
      [](const std::string& instance, long samples, std::uint64_t seed) {
        const Instance inst = make_instance(instance);
        const SAAResult r = run_saa(inst.problem, samples, seed);
        return py::make_tuple(r.solution, r.residual);
      },
      py::arg("instance") = "two_ball", py::arg("samples") = 1000, py::arg("seed") = 1,
      "Sample average approximation; returns (solution, residual).");

  m.def(
      "project_feasible",
      [](const std::string& instance, const Vec& x) {
        const Instance inst = make_instance(instance);
        return prox(inst.problem.f_part, 1.0, x);
      },
      py::arg("instance"), py::arg("x"));

  m.def(
      "project_manifold",
      [](const std::string& instance, const Vec& x) {
        return project_manifold(x, make_instance(instance).manifold);
      },
      py::arg("instance"), py::arg("x"));

  m.def("ks_statistic", &ks_statistic, py::arg("samples"), py::arg("mean"), py::arg("variance"));
}
