#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>

#include "mddra/harness.hpp"

namespace py = pybind11;
using namespace mddra;

namespace {

Grid make_grid(std::size_t nx, std::size_t ny, double cell_size) {
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.cell_size = cell_size;
  return g;
}

std::vector<Field> fields(const Grid& g, const std::vector<std::vector<double>>& slots) {
  std::vector<Field> out;
  for (std::size_t t = 0; t < slots.size(); ++t) {
    if (slots[t].size() != g.size()) throw ShapeError("field length must equal nx * ny");
    Field f(g, 0.0, static_cast<int>(t));
    f.values = slots[t];
    out.push_back(std::move(f));
  }
  return out;
}

py::dict summary_dict(const harness::SchemeSeedResult& s) {
  py::dict d;
  d["scheme"] = s.scheme;
  d["seed"] = s.seed;
  d["final_eta_T"] = s.final_eta_T;
  d["final_kappa"] = s.final_kappa;
  d["final_zeta"] = s.final_zeta;
  d["horizon_kappa"] = s.horizon_kappa;
  d["horizon_d_tot"] = s.horizon_d_tot;
  d["eta_full"] = s.eta_full;
  d["final_queue_max"] = s.final_queue_max;
  d["running_queue_max"] = s.running_queue_max;
  d["non_converged"] = s.non_converged;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "IREE-maximizing bandwidth and power allocation";
  m.attr("__version__") = std::string(harness::kVersion);

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def(
      "js_divergence",
      [](const std::vector<double>& a, const std::vector<double>& b) { return metrics::js_divergence(a, b).value; },
      py::arg("a"), py::arg("b"), "Base-2 Jensen-Shannon divergence of two nonnegative mass vectors.");

  m.def(
      "iree_report",
      [](const std::vector<std::vector<double>>& capacity, const std::vector<std::vector<double>>& traffic,
         const std::vector<double>& power, std::size_t nx, std::size_t ny, double cell_size) {
        const Grid g = make_grid(nx, ny, cell_size);
        const auto r = metrics::report(fields(g, capacity), fields(g, traffic), power);
        py::dict d;
        d["eta_full"] = r.eta_full;
        d["eta_lb"] = r.eta_lb;
        d["eta_transient"] = r.eta_transient;
        d["kappa"] = r.kappa;
        d["zeta"] = r.zeta;
        return d;
      },
      py::arg("capacity"), py::arg("traffic"), py::arg("power"), py::arg("nx"), py::arg("ny") = 1,
      py::arg("cell_size") = 1.0, "Horizon metrics for per-slot capacity and traffic fields (row-major cells).");

  m.def(
      "queue_drift_step",
      [](double q, double nu) {
        const auto s = lyapunov::queue_drift_step(q, nu);
        return py::make_tuple(s.next, s.drift);
      },
      py::arg("q"), py::arg("nu"), "One corrected queue step; returns (next, drift).");

  m.def("csv_columns", &harness::csv_columns, "Trace CSV column order.");

  m.def(
      "config_json",
      [](std::optional<std::filesystem::path> path, const std::vector<std::string>& overrides) {
        return harness::canonical_json(harness::load_config(path, overrides));
      },
      py::arg("path") = py::none(), py::arg("overrides") = std::vector<std::string>{},
      "Resolved configuration as canonical JSON.");

  m.def(
      "config_hash",
      [](std::optional<std::filesystem::path> path, const std::vector<std::string>& overrides) {
        return harness::config_hash(harness::load_config(path, overrides));
      },
      py::arg("path") = py::none(), py::arg("overrides") = std::vector<std::string>{});

  m.def(
      "run_experiment",
      [](std::optional<std::filesystem::path> path, const std::vector<std::string>& overrides,
         std::optional<std::vector<std::string>> schemes, std::optional<std::vector<std::uint64_t>> seeds) {
        auto cfg = harness::load_config(path, overrides);
        if (schemes) cfg.schemes = *schemes;
        if (seeds) cfg.seeds = *seeds;
        cfg.validate();
        harness::ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = harness::run_experiment(cfg);
        }
        py::dict out;
        out["config_hash"] = r.config_hash;
        py::list summary, traces;
        for (const auto& s : r.summary) summary.append(summary_dict(s));
        for (const auto& run : r.runs) {
          std::ostringstream os;
          harness::write_csv(os, run.rows);
          py::dict t;
          t["scheme"] = run.scheme;
          t["seed"] = run.seed;
          t["csv"] = os.str();
          traces.append(t);
        }
        out["summary"] = summary;
        out["traces"] = traces;
        return out;
      },
      py::arg("path") = py::none(), py::arg("overrides") = std::vector<std::string>{},
      py::arg("schemes") = py::none(), py::arg("seeds") = py::none(),
      "Runs every (seed, scheme) pair; returns per-run summaries and trace CSV text.");

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"mddra"};
        for (const auto& a : args) argv.push_back(a.c_str());
        py::gil_scoped_release release;
        return harness::cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Command-line entry point; returns the exit code.");
}
