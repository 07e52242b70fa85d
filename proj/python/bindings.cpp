// Copyright 2026 The linfel Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     https://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "linfel/cli_io.hpp"
#include "linfel/diagnostics.hpp"
#include "linfel/errors.hpp"
#include "linfel/solver.hpp"
#include "linfel/version.hpp"

namespace py = pybind11;
using namespace linfel;

namespace {

py::dict history_dict(const ContinuationState& st) {
  py::list p, e, a, grad, iters, norm, dual;
  for (const LevelRecord& r : st.history) {
    p.append(r.p);
    e.append(r.energy.e_p);
    a.append(r.energy.a);
    grad.append(r.inner.grad_norm);
    iters.append(r.inner.iterations);
    norm.append(r.normalization_residual);
    dual.append(r.duality_residual);
  }
  py::dict d;
  d["p"] = p;
  d["e_p"] = e;
  d["a_p"] = a;
  d["grad_norm"] = grad;
  d["iterations"] = iters;
  d["normalization_residual"] = norm;
  d["duality_residual"] = dual;
  return d;
}

py::dict state_dict(const ProblemSpec& spec, const ContinuationState& st) {
  const Grid& g = *spec.grid();
  Eigen::MatrixXd points(g.size(), g.dim());
  for (int k = 0; k < g.size(); ++k) {
    for (int a = 0; a < g.dim(); ++a) points(k, a) = g.point(k)[a];
  }
  py::dict d;
  d["points"] = points;
  d["u"] = st.u.values();
  d["S"] = eval_S(spec, st.u).values();
  d["f"] = st.kernel ? st.kernel->f.values() : st.multipliers.f.values();
  d["e_infty_estimate"] = st.history.back().energy.e_p;
  d["e_sup"] = st.history.back().e_sup;
  d["all_converged"] = st.all_converged;
  d["monotone"] = st.monotone;
  d["history"] = history_dict(st);
  if (st.kernel) {
    py::dict k;
    k["branch"] = st.kernel->branch == AdjointKernel::Branch::kBoundaryValue ? "boundary_value" : "kernel";
    k["residual"] = st.kernel->residual;
    k["condition_estimate"] = st.kernel->condition_estimate;
    d["adjoint_kernel"] = k;
  }
  return d;
}

RunConfig config_from(const py::object& source) {
  if (py::isinstance<py::str>(source)) {
    const std::string text = source.cast<std::string>();
    if (text.find('\n') == std::string::npos && std::filesystem::exists(text)) return load_config(text);
    return parse_config(text);
  }
  return load_config(source.cast<std::filesystem::path>());
}

}  // namespace

PYBIND11_MODULE(_linfel, m) {
  m.doc() = "Minimisers and certificates for L-infinity second-order variational problems";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ArithmeticError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  py::class_<Oracle1DSolution>(m, "Oracle1D")
      .def_readonly("a", &Oracle1DSolution::a)
      .def_readonly("b", &Oracle1DSolution::b)
      .def_readonly("e_infty", &Oracle1DSolution::e_infty)
      .def_readonly("switch_point", &Oracle1DSolution::switch_point)
      .def_readonly("sign", &Oracle1DSolution::sign)
      .def("u", py::vectorize(&Oracle1DSolution::u))
      .def("du", py::vectorize(&Oracle1DSolution::du))
      .def("d2u", py::vectorize(&Oracle1DSolution::d2u))
      .def("f", py::vectorize(&Oracle1DSolution::f))
      .def("boundary_residual", &Oracle1DSolution::boundary_residual)
      .def("__repr__", [](const Oracle1DSolution& o) {
        return "Oracle1D(a=" + format_number(o.a) + ", b=" + format_number(o.b) + ", e_infty=" +
               format_number(o.e_infty) + ")";
      });

  m.def("oracle_1d", &oracle_1d, py::arg("a"), py::arg("b"),
        "Closed-form minimiser of max|u''| on (0, 1) with u(0) = u'(0) = 0, u(1) = a, u'(1) = b.");

  m.def(
      "oracle_1d_brute_force",
      [](double a, double b, int cells, int starts, std::uint64_t seed) {
        return oracle_1d_brute_force(a, b, cells, starts, seed).e_infty;
      },
      py::arg("a"), py::arg("b"), py::arg("cells") = 400, py::arg("starts") = 20, py::arg("seed") = 1,
      "Independent numerical estimate of e_infty for the same data.");

  m.def(
      "validate_config", [](const py::object& source) { return to_yaml(config_from(source)); }, py::arg("source"),
      "Parses a config (path or YAML text) and returns its canonical YAML form.");

  m.def(
      "solve",
      [](const py::object& source, bool certify) {
        const RunConfig config = config_from(source);
        const ProblemSpec spec = build_problem(config);
        ContinuationOptions o;
        o.p_start = config.solver.p_start;
        o.p_max = config.solver.p_max;
        o.stop_tolerance = config.solver.stop_tolerance;
        o.early_stop = config.solver.early_stop;
        o.inner.tolerance = config.solver.tolerance;
        o.inner.max_iterations = config.solver.max_iterations;
        o.sigma = config.solver.sigma;
        o.p0 = config.solver.p0;
        o.zero_threshold = config.solver.zero_threshold;
        ContinuationState st;
        {
          py::gil_scoped_release release;
          st = run_continuation(spec, ContinuationMode::kConstruct, o);
          if (certify) {
            o.anchor = st.u;
            st = run_continuation(spec, ContinuationMode::kCertify, o);
          }
        }
        return state_dict(spec, st);
      },
      py::arg("source"), py::arg("certify") = false,
      "Runs the p-continuation for a config (path or YAML text) and returns the fields and history.");

  m.def(
      "run",
      [](const py::object& source, const std::filesystem::path& out_dir, std::optional<std::string> mode) {
        RunConfig config = config_from(source);
        if (mode) {
          if (*mode == "solve") config.mode = RunMode::kSolve;
          else if (*mode == "certify") config.mode = RunMode::kCertify;
          else if (*mode == "diagnose") config.mode = RunMode::kDiagnose;
          else if (*mode == "oracle1d") config.mode = RunMode::kOracle1D;
          else throw ConfigError("unknown mode '" + *mode + "'", "mode");
        }
        RunArtifact art;
        {
          py::gil_scoped_release release;
          art = run(config, out_dir);
        }
        py::dict d;
        d["exit_code"] = art.exit_code;
        d["message"] = art.message;
        d["directory"] = art.directory;
        if (art.certificate) d["certificate_pass"] = art.certificate->pass();
        return d;
      },
      py::arg("source"), py::arg("out_dir"), py::arg("mode") = py::none(),
      "Runs a config end to end and writes report.yaml and the CSV tables to out_dir.");

  m.def(
      "compare",
      [](const std::filesystem::path& a, const std::filesystem::path& b, double tolerance) {
        const CompareReport r = compare(a, b, tolerance);
        py::dict fields;
        for (const auto& [name, dist] : r.fields) {
          py::dict f;
          f["linf"] = dist.linf;
          f["l1"] = dist.l1;
          fields[py::str(name)] = f;
        }
        py::dict d;
        d["fields"] = fields;
        d["e_infty_delta"] = r.e_infty_delta;
        d["history_linf"] = r.history_linf;
        d["verdict_changes"] = r.verdict_changes;
        d["identical"] = r.identical();
        d["pass"] = r.pass();
        return d;
      },
      py::arg("a"), py::arg("b"), py::arg("tolerance") = 0.0, "Compares two artifact directories.");
}
