// Python bindings: models from config text, the deterministic control
// solvers, decoupling fields, path ensembles and scenario runs.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>

#include "mfsel/control.hpp"
#include "mfsel/ensemble.hpp"
#include "mfsel/error.hpp"
#include "mfsel/experiment.hpp"
#include "mfsel/field.hpp"
#include "mfsel/stats.hpp"

namespace py = pybind11;
using namespace mfsel;

namespace {

ScenarioConfig config_of(const py::object& cfg) {
  if (py::isinstance<py::str>(cfg)) return ScenarioConfig::parse(cfg.cast<std::string>());
  ScenarioConfig out;
  for (const auto& [k, v] : cfg.cast<py::dict>()) {
    out.set(py::str(k).cast<std::string>(), py::str(v).cast<std::string>());
  }
  return out;
}

py::array_t<double> array(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  py::array_t<double> a(shape);
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<double> stack(const std::vector<Vec>& v) {
  const auto rows = static_cast<py::ssize_t>(v.size());
  const auto cols = v.empty() ? 0 : static_cast<py::ssize_t>(v.front().size());
  py::array_t<double> a({rows, cols});
  auto w = a.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < rows; ++i) {
    for (py::ssize_t j = 0; j < cols; ++j) w(i, j) = v[i](j);
  }
  return a;
}

py::dict solution_dict(const OCSolution& s) {
  py::dict d;
  std::vector<double> t(s.grid.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = s.grid.at(k);
  d["t"] = array(t, {static_cast<py::ssize_t>(t.size())});
  d["m"] = stack(s.m);
  d["eta"] = stack(s.eta);
  d["eta0"] = s.eta0;
  d["cost"] = s.cost;
  d["minimizer"] = s.classification == Classification::kMinimizer;
  d["terminal_residual"] = s.terminal_residual;
  return d;
}

Vec nu0_or_default(const ModelSpec& spec, const std::optional<Vec>& nu0) {
  return nu0 ? *nu0 : spec.nu0;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Selection experiments for potential mean field games";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<ModelSpec>(m, "Model")
      .def_static(
          "from_config", [](const py::object& cfg) { return model_from_config(config_of(cfg)); },
          py::arg("config"), "Model from config text or a dict of config entries.")
      .def_readonly("name", &ModelSpec::name)
      .def_readonly("dim", &ModelSpec::dim)
      .def_readonly("T", &ModelSpec::T)
      .def_readonly("sigma", &ModelSpec::sigma)
      .def_readonly("b", &ModelSpec::b)
      .def_readwrite("nu0", &ModelSpec::nu0)
      .def_property_readonly("control_only",
                             [](const ModelSpec& s) {
                               return s.running == RunningCost::kControlOnly;
                             })
      .def("terminal_gradient", [](const ModelSpec& s, const Vec& x) {
        return terminal_gradient(s, x);
      });

  m.def("logcosh_positive_root", &logcosh_positive_root, py::arg("kappa"));

  m.def(
      "enumerate_stationary",
      [](const ModelSpec& spec, double t0, const std::optional<Vec>& nu0) {
        const auto set = enumerate_stationary(spec, t0, nu0_or_default(spec, nu0));
        py::list out;
        for (const auto& s : set.solutions) out.append(solution_dict(s));
        return out;
      },
      py::arg("model"), py::arg("t0") = 0.0, py::arg("nu0") = py::none(),
      "Stationary points of the control problem, sorted by cost.");

  m.def(
      "value",
      [](const ModelSpec& spec, double t0, const std::optional<Vec>& nu0, bool cross_check) {
        const auto v = value_function(spec, t0, nu0_or_default(spec, nu0), cross_check);
        py::dict d;
        d["value"] = v.value;
        d["descent_value"] = v.cross_checked ? v.descent_value : NAN;
        d["consistent"] = v.consistent;
        d["warning"] = v.warning;
        return d;
      },
      py::arg("model"), py::arg("t0") = 0.0, py::arg("nu0") = py::none(),
      py::arg("cross_check") = true);

  m.def("static_U", &static_U, py::arg("model"), py::arg("t0"), py::arg("nu0"), py::arg("a"));
  m.def(
      "minimize_static_U",
      [](const ModelSpec& spec, double t0, const std::optional<Vec>& nu0) {
        const auto r = minimize_static_U(spec, t0, nu0_or_default(spec, nu0));
        py::dict d;
        d["value"] = r.value;
        d["minimizers"] = r.minimizers;
        d["on_sphere"] = r.on_sphere;
        d["sphere_radius"] = r.sphere_radius;
        return d;
      },
      py::arg("model"), py::arg("t0") = 0.0, py::arg("nu0") = py::none());

  py::class_<DecouplingField>(m, "Field")
      .def_property_readonly("dim", &DecouplingField::dim)
      .def_property_readonly("parameter", &DecouplingField::parameter)
      .def_property_readonly("common_noise",
                             [](const DecouplingField& f) {
                               return f.kind() == FieldKind::kCommonNoise;
                             })
      .def_property_readonly("times",
                             [](const DecouplingField& f) {
                               std::vector<double> t(f.time().size());
                               for (std::size_t k = 0; k < t.size(); ++k) t[k] = f.time().at(k);
                               return t;
                             })
      .def("coords", [](const DecouplingField& f, std::size_t axis) {
        return f.space().coords(axis);
      })
      .def_property_readonly(
          "values",
          [](const DecouplingField& f) {
            std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(f.time().size())};
            for (const auto& a : f.space().axes()) shape.push_back(static_cast<py::ssize_t>(a.nodes));
            shape.push_back(static_cast<py::ssize_t>(f.dim()));
            return array(f.values(), shape);
          },
          "Array of shape (levels, nodes[, nodes], dim).")
      .def("__call__", [](const DecouplingField& f, double t, const Vec& x) { return f(t, x); })
      .def("save", [](const DecouplingField& f, const std::string& path) { save_field(f, path); })
      .def_static("load", &load_field);

  auto field_options = [](std::size_t substeps, std::size_t threads) {
    FieldSolverOptions o;
    o.substeps = substeps;
    o.threads = threads;
    return o;
  };

  m.def(
      "solve_field",
      [field_options](const ModelSpec& spec, double n_players, double half_width,
                      std::size_t nodes, std::size_t steps, std::size_t substeps,
                      std::size_t threads) {
        py::gil_scoped_release nogil;
        return solve_field_N(spec, n_players, SpaceGrid::symmetric(spec.dim, half_width, nodes),
                             TimeGrid(0.0, spec.T, steps), field_options(substeps, threads));
      },
      py::arg("model"), py::arg("N"), py::arg("L"), py::arg("nodes"), py::arg("steps") = 1000,
      py::arg("substeps") = 0, py::arg("threads") = 1,
      "u^N on [-L, L]^d; N = inf gives the noiseless field.");

  m.def(
      "solve_field_eps",
      [field_options](const ModelSpec& spec, double eps, double half_width, std::size_t nodes,
                      std::size_t steps, std::size_t substeps, std::size_t threads) {
        py::gil_scoped_release nogil;
        return solve_field_eps(spec, eps, SpaceGrid::symmetric(spec.dim, half_width, nodes),
                               TimeGrid(0.0, spec.T, steps), field_options(substeps, threads));
      },
      py::arg("model"), py::arg("eps"), py::arg("L"), py::arg("nodes"), py::arg("steps") = 1000,
      py::arg("substeps") = 0, py::arg("threads") = 1);

  m.def(
      "riccati_field",
      [](const ModelSpec& spec, double n_players, std::size_t steps, double t, const Vec& x) {
        return riccati_field_oracle(spec, n_players, TimeGrid(0.0, spec.T, steps))(t, x);
      },
      py::arg("model"), py::arg("N"), py::arg("steps"), py::arg("t"), py::arg("m"),
      "Closed-form u(t, m) for quadratic data.");

  m.def(
      "simulate",
      [](const ModelSpec& spec, const DecouplingField& field, std::size_t paths,
         std::uint64_t seed, std::uint64_t stream_base, std::size_t substeps, bool noise,
         bool zero_control, std::size_t threads) {
        EnsembleOptions o;
        o.paths = paths;
        o.seed = seed;
        o.stream_base = stream_base;
        o.substeps = substeps;
        o.noise = noise;
        o.zero_control = zero_control;
        o.threads = threads;
        std::optional<PathEnsemble> run;
        {
          py::gil_scoped_release nogil;
          run = simulate_ensemble(spec, field, o);
        }
        const PathEnsemble& e = *run;
        const auto p = static_cast<py::ssize_t>(e.paths);
        const auto d = static_cast<py::ssize_t>(e.dim);
        py::dict out;
        out["initial"] = array(e.initial, {p, d});
        out["terminal"] = array(e.terminal, {p, d});
        out["eta0"] = array(e.eta0, {p, d});
        out["cost"] = array(e.cost, {p});
        out["exit_fraction"] = e.exit_fraction;
        out["warning"] = e.warning;
        return out;
      },
      py::arg("model"), py::arg("field"), py::arg("paths") = 1000, py::arg("seed") = 0,
      py::arg("stream_base") = 0, py::arg("substeps") = 1, py::arg("noise") = true,
      py::arg("zero_control") = false, py::arg("threads") = 1);

  m.def(
      "run_scenario",
      [](const py::object& cfg, std::size_t threads) {
        const auto eff = effective_config(config_of(cfg));
        RunOptions o;
        o.threads = threads;
        ScenarioReport r;
        {
          py::gil_scoped_release nogil;
          r = run_scenario(eff, o);
        }
        py::list rows;
        for (const auto& row : r.rows) {
          py::dict d;
          d["kind"] = row.kind;
          d["parameter"] = row.parameter;
          d["probe"] = row.probe;
          d["stream_base"] = row.stream_base;
          for (std::size_t i = 0; i < r.columns.size(); ++i) d[py::str(r.columns[i])] = row.metrics[i];
          rows.append(d);
        }
        py::list verdicts;
        for (const auto& v : r.verdicts) {
          verdicts.append(py::make_tuple(v.name, v.pass, v.statistical, v.detail));
        }
        py::dict out;
        out["scenario"] = r.scenario;
        out["config_hash"] = r.config_hash;
        out["seed"] = r.seed;
        out["rows"] = rows;
        out["verdicts"] = verdicts;
        out["notes"] = r.notes;
        out["config"] = eff.canonical();
        return out;
      },
      py::arg("config"), py::arg("threads") = 1,
      "Runs a scenario from config text or a dict of entries.");

  m.def(
      "wasserstein1",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return wasserstein1_1d(a, b);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "kuiper",
      [](const std::vector<double>& angles) {
        const auto r = circular_uniformity(angles);
        return py::make_tuple(r.statistic, r.p_value);
      },
      py::arg("angles"), "Kuiper statistic V and p-value for uniform angles.");
}
