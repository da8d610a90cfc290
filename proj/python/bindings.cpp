#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pfvm/analysis.hpp"
#include "pfvm/config.hpp"
#include "pfvm/errors.hpp"
#include "pfvm/interp.hpp"
#include "pfvm/mesh.hpp"
#include "pfvm/model.hpp"
#include "pfvm/scheme.hpp"
#include "pfvm/simulate.hpp"

namespace py = pybind11;
using namespace pfvm;

namespace {

Vec3 to_vec3(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

MeshFunction as_function(const Mesh& mesh, const py::array_t<double>& values) {
  if (values.ndim() != 1 || values.shape(0) != mesh.n_cells())
    throw InputError("expected a 1d array with one value per cell");
  std::vector<double> v(values.data(), values.data() + values.shape(0));
  return MeshFunction(mesh, std::move(v));
}

py::array_t<double> as_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict report_dict(const AdmissibilityReport& report) {
  py::dict out;
  py::list conditions;
  for (const ConditionReport& c : report.conditions) {
    py::dict cd;
    cd["pass"] = c.pass;
    cd["worst"] = c.worst;
    py::list violations;
    for (const Violation& v : c.violations) {
      py::dict vd;
      vd["entity_a"] = v.entity_a;
      vd["entity_b"] = v.entity_b;
      vd["magnitude"] = v.magnitude;
      vd["what"] = v.what;
      violations.append(vd);
    }
    cd["violations"] = violations;
    conditions.append(cd);
  }
  out["conditions"] = conditions;
  out["boundary_incident_points"] = report.boundary_incident_points;
  out["pass"] = report.pass();
  return out;
}

py::dict metrics_dict(const MeshMetrics& m) {
  py::dict out;
  out["pyramid_residual"] = m.pyramid_residual;
  out["mesh_norm"] = m.mesh_norm;
  out["tau_min"] = m.tau_min;
  out["tau_max"] = m.tau_max;
  out["volume_min"] = m.volume_min;
  out["volume_max"] = m.volume_max;
  out["cell_volume_sum"] = m.cell_volume_sum;
  out["domain_volume"] = m.domain_volume;
  out["cells"] = m.cells;
  out["faces"] = m.faces;
  out["interior_faces"] = m.interior_faces;
  out["boundary_faces"] = m.boundary_faces;
  return out;
}

py::dict ledger_dict(const EstimateLedger& ledger) {
  const size_t n = ledger.rows().size();
  auto column = [&](auto get) {
    py::array_t<double> arr(static_cast<py::ssize_t>(n));
    double* d = arr.mutable_data();
    for (size_t i = 0; i < n; ++i) d[i] = get(ledger.rows()[i]);
    return arr;
  };
  py::dict out;
  out["t"] = column([](const LedgerRow& r) { return r.t; });
  out["norm2_pdot"] = column([](const LedgerRow& r) { return r.norm2_pdot; });
  out["norm2_udot"] = column([](const LedgerRow& r) { return r.norm2_udot; });
  out["semi2_p"] = column([](const LedgerRow& r) { return r.semi2_p; });
  out["semi2_u"] = column([](const LedgerRow& r) { return r.semi2_u; });
  out["well_energy"] = column([](const LedgerRow& r) { return r.well_energy; });
  out["int_pdot"] = column([](const LedgerRow& r) { return r.int_pdot; });
  out["int_udot"] = column([](const LedgerRow& r) { return r.int_udot; });
  out["lhs"] = column([](const LedgerRow& r) { return r.lhs; });
  out["rhs"] = column([](const LedgerRow& r) { return r.rhs; });
  out["margin"] = column([](const LedgerRow& r) { return r.margin; });
  return out;
}

}  // namespace

PYBIND11_MODULE(_pfvm, m) {
  m.doc() = "finite volume solver for coupled heat / phase-field solidification";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<BlowupError>(m, "BlowupError", PyExc_RuntimeError);

  py::class_<Mesh>(m, "Mesh")
      .def_property_readonly("n_cells", &Mesh::n_cells)
      .def_property_readonly("n_faces", &Mesh::n_faces)
      .def_property_readonly("n_vertices", &Mesh::n_vertices)
      .def_property_readonly("domain_volume", [](const Mesh& mesh) { return mesh.domain_volume; })
      .def_property_readonly("cell_centers",
                             [](const Mesh& mesh) {
                               py::array_t<double> out({mesh.n_cells(), 3});
                               double* d = out.mutable_data();
                               for (int c = 0; c < mesh.n_cells(); ++c) {
                                 d[3 * c] = mesh.cells[c].point.x;
                                 d[3 * c + 1] = mesh.cells[c].point.y;
                                 d[3 * c + 2] = mesh.cells[c].point.z;
                               }
                               return out;
                             })
      .def_property_readonly("cell_volumes",
                             [](const Mesh& mesh) {
                               py::array_t<double> out(mesh.n_cells());
                               double* d = out.mutable_data();
                               for (int c = 0; c < mesh.n_cells(); ++c) d[c] = mesh.cells[c].volume;
                               return out;
                             })
      .def("validate", [](const Mesh& mesh, double tol,
                          double angle_tol) { return report_dict(validate_admissibility(mesh, tol, angle_tol)); },
           py::arg("tol") = 1e-9, py::arg("angle_tol") = 1e-9)
      .def("metrics", [](const Mesh& mesh) { return metrics_dict(mesh_metrics(mesh)); })
      .def("save", [](const Mesh& mesh, const std::string& path) { save_mesh(mesh, path); })
      .def("locate_cell", [](const Mesh& mesh, std::array<double, 3> x) {
        return mesh.locate_cell(to_vec3(x));
      });

  m.def(
      "generate_box_mesh",
      [](std::array<double, 3> extents, std::array<std::vector<double>, 3> spacings) {
        return generate_box_mesh(extents, spacings);
      },
      py::arg("extents"), py::arg("spacings"));
  m.def(
      "uniform_box_mesh",
      [](std::array<double, 3> extents, std::array<int, 3> cells) {
        return uniform_box_mesh(extents, cells);
      },
      py::arg("extents"), py::arg("cells"));
  m.def("refine_box_mesh", &refine_box_mesh, py::arg("mesh"));
  m.def("load_mesh", &load_mesh, py::arg("path"), py::arg("planarity_tol") = 1e-8);

  m.def(
      "project",
      [](const Mesh& mesh, const std::function<double(std::array<double, 3>)>& f) {
        return as_array(
            project(mesh, [&](const Vec3& x) { return f({x.x, x.y, x.z}); }).values());
      },
      py::arg("mesh"), py::arg("field"));

  m.def(
      "discrete_products",
      [](const Mesh& mesh, const py::array_t<double>& v, const py::array_t<double>& w) {
        DiscreteProducts p = discrete_products(as_function(mesh, v), as_function(mesh, w));
        py::dict out;
        out["inner"] = p.inner;
        out["norm"] = p.norm;
        out["seminorm_sq"] = p.seminorm_sq;
        return out;
      },
      py::arg("mesh"), py::arg("v"), py::arg("w"));

  m.def(
      "eval_interpolants",
      [](const Mesh& mesh, const py::array_t<double>& w, std::array<double, 3> x) {
        DualMesh dual(mesh);
        InterpolantValues v = eval_interpolants(dual, as_function(mesh, w), to_vec3(x));
        py::dict out;
        out["piecewise_constant"] = v.piecewise_constant;
        out["axial_linear"] = v.axial_linear;
        out["cell"] = v.cell;
        out["dual_cell"] = v.dual_cell;
        return out;
      },
      py::arg("mesh"), py::arg("w"), py::arg("x"));

  m.def("interpolant_norm_bound", [](const Mesh& mesh) {
    InterpolantNormBound b = interpolant_norm_bound(mesh);
    return py::make_tuple(b.squared, b.unsquared);
  });
  m.def("dual_volume_sum", [](const Mesh& mesh) { return DualMesh(mesh).total_volume(); });

  m.def("reaction_cubic", &reaction_cubic, py::arg("p"));
  m.def("double_well", &double_well, py::arg("x"));
  m.def("double_well_constant", &double_well_constant);
  m.def(
      "limiter",
      [](double x, double h_inf, double h0, double h1, double h_sup) {
        return limiter(x, LimiterKnots{h_inf, h0, h1, h_sup});
      },
      py::arg("x"), py::arg("h_inf") = -4.0, py::arg("h0") = -2.0, py::arg("h1") = 2.0,
      py::arg("h_sup") = 4.0);

  m.def(
      "stable_dt",
      [](const Mesh& mesh, const std::string& params_json, double safety) {
        RunConfig cfg = parse_config_text(params_json.empty() ? "{}" : params_json);
        return stable_dt(mesh, cfg.params, safety);
      },
      py::arg("mesh"), py::arg("config_json") = "{}", py::arg("safety") = 0.5);

  m.def(
      "run_simulation",
      [](const std::string& config_json) {
        RunConfig cfg = parse_config_text(config_json);
        Mesh mesh = build_mesh(cfg.mesh);
        RunResult result = run_simulation(cfg, mesh);
        MarginReport margin = apriori_bound_check(result.ledger, cfg.params, cfg.end_time);
        py::dict out;
        out["t"] = result.final_state.t;
        out["u"] = as_array(result.final_state.u.values());
        out["p"] = as_array(result.final_state.p.values());
        out["dt"] = result.dt;
        out["steps"] = result.steps;
        out["ledger"] = ledger_dict(result.ledger);
        out["margin"] = margin.margin;
        out["margin_ok"] = margin.ok;
        return out;
      },
      py::arg("config_json"));

  m.def(
      "run_and_write",
      [](const std::string& config_json) {
        RunOutputs out = run_and_write(parse_config_text(config_json));
        py::dict d;
        d["files"] = out.files;
        d["directory"] = out.directory;
        d["steps"] = out.steps;
        return d;
      },
      py::arg("config_json"));

  m.def(
      "refinement_study",
      [](const std::string& config_json, int levels) {
        ConvergenceTable table = refinement_study(parse_config_text(config_json), levels);
        py::list rows;
        for (const StudyRow& r : table.rows) {
          py::dict rd;
          rd["level"] = r.level;
          rd["mesh_norm"] = r.mesh_norm;
          rd["diff_u"] = r.diff_u;
          rd["diff_p"] = r.diff_p;
          rd["order_u"] = r.order_u;
          rd["order_p"] = r.order_p;
          rd["flux_residual"] = r.flux_residual;
          rows.append(rd);
        }
        return rows;
      },
      py::arg("config_json"), py::arg("levels"));

  m.def("serialize_config", [](const std::string& config_json) {
    return serialize_config(parse_config_text(config_json));
  });
}
