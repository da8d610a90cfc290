#include <cstdio>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "pfvm/analysis.hpp"
#include "pfvm/config.hpp"
#include "pfvm/errors.hpp"
#include "pfvm/interp.hpp"
#include "pfvm/mesh.hpp"
#include "pfvm/simulate.hpp"

namespace {

using namespace pfvm;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBlowup = 3;

void print_metrics(const MeshMetrics& m) {
  std::printf("cells %d, faces %d (%d interior, %d boundary)\n", m.cells, m.faces,
              m.interior_faces, m.boundary_faces);
  std::printf("domain volume     %.17g\n", m.domain_volume);
  std::printf("cell volume sum   %.17g (min %.3g, max %.3g)\n", m.cell_volume_sum, m.volume_min,
              m.volume_max);
  std::printf("pyramid residual  %.3e (relative %.3e)\n", m.pyramid_residual,
              std::abs(m.pyramid_residual) / m.domain_volume);
  std::printf("mesh norm         %.17g\n", m.mesh_norm);
  std::printf("transmissibility  min %.3g, max %.3g\n", m.tau_min, m.tau_max);
}

int run_check_mesh(const std::string& path, double tol, double angle_tol) {
  Mesh mesh = load_mesh(path);
  AdmissibilityReport report = validate_admissibility(mesh, tol, angle_tol);
  static const char* names[5] = {"partition of the domain", "cell boundary closure",
                                 "pairwise intersections", "significant points",
                                 "orthogonality and distance split"};
  for (int i = 0; i < 5; ++i) {
    const ConditionReport& c = report.conditions[i];
    std::printf("condition %d (%s): %s", i + 1, names[i], c.pass ? "pass" : "FAIL");
    if (!c.pass) std::printf("  worst violation %.3e, %zu entities", c.worst, c.violations.size());
    std::printf("\n");
    for (size_t v = 0; v < c.violations.size() && v < 8; ++v) {
      const Violation& viol = c.violations[v];
      std::printf("    [%d", viol.entity_a);
      if (viol.entity_b >= 0) std::printf(", %d", viol.entity_b);
      std::printf("] %s (%.3e)\n", viol.what.c_str(), viol.magnitude);
    }
  }
  if (!report.boundary_incident_points.empty())
    std::printf("note: %zu significant point(s) touch their cell boundary\n",
                report.boundary_incident_points.size());
  print_metrics(mesh_metrics(mesh));
  std::printf("admissibility: %s\n", report.pass() ? "PASS" : "FAIL");
  return report.pass() ? kExitOk : kExitCheckFailed;
}

int run_verify(unsigned long long seed) {
  struct Case {
    const char* name;
    Mesh mesh;
  };
  std::vector<Case> cases;
  cases.push_back({"unit cell", uniform_box_mesh({1, 1, 1}, {1, 1, 1})});
  cases.push_back({"2x1x1", uniform_box_mesh({1, 1, 1}, {2, 1, 1})});
  cases.push_back({"8^3", uniform_box_mesh({1, 1, 1}, {8, 8, 8})});
  cases.push_back({"graded", generate_box_mesh({1, 1, 1}, {{{0, 0.25, 1},
                                                            {0, 0.5, 1},
                                                            {0, 0.125, 0.5, 1}}})});
  cases.push_back({"anisotropic", uniform_box_mesh({2, 1, 0.5}, {6, 5, 4})});

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  bool ok = true;
  auto gate = [&](const char* what, double value, double tol) {
    bool pass = value <= tol;
    ok = ok && pass;
    std::printf("  %-38s %.3e  (tol %.1e) %s\n", what, value, tol, pass ? "ok" : "FAIL");
  };

  for (Case& c : cases) {
    std::printf("%s\n", c.name);
    const Mesh& mesh = c.mesh;
    MeshMetrics metrics = mesh_metrics(mesh);
    DualMesh dual(mesh);
    gate("pyramid volume identity", std::abs(metrics.pyramid_residual) / metrics.domain_volume,
         1e-12);
    gate("dual volume sum", std::abs(dual.total_volume() - mesh.domain_volume) / mesh.domain_volume,
         1e-12);
    gate("admissibility", validate_admissibility(mesh).pass() ? 0.0 : 1.0, 0.5);

    double worst_norm = 0.0, worst_semi = 0.0, worst_bound = 0.0, worst_anti = 0.0;
    double qs = interpolant_norm_bound(mesh).squared;
    for (int trial = 0; trial < 20; ++trial) {
      MeshFunction w(mesh), v(mesh);
      for (int i = 0; i < mesh.n_cells(); ++i) {
        w[i] = unit(rng);
        v[i] = unit(rng);
      }
      double inner = inner_product(v, w);
      double via_dual = 0.0;
      for (const DualCell& dc : dual.cells()) {
        double area = mesh.faces[dc.face].area;
        via_dual += area * dc.d_k / 3.0 * v[dc.cell_k] * w[dc.cell_k];
        if (dc.cell_l >= 0) via_dual += area * dc.d_l / 3.0 * v[dc.cell_l] * w[dc.cell_l];
      }
      worst_norm = std::max(worst_norm, std::abs(inner - via_dual) / (std::abs(inner) + 1e-30));
      double semi = h1_seminorm_sq(w);
      double grad3 = 3.0 * grad_interpolant_l2_sq(dual, w);
      worst_semi = std::max(worst_semi, std::abs(semi - grad3) / (semi + 1e-30));
      double lin = interpolant_l2_sq_linear(dual, w);
      double con = inner_product(w, w);
      worst_bound = std::max(worst_bound, lin - qs * con);

      std::vector<double> flux;
      cell_flux_all(w, BoundaryValues{}, flux);
      double total = 0.0, boundary_only = 0.0;
      for (int i = 0; i < mesh.n_cells(); ++i) total += flux[i];
      for (const Face& f : mesh.faces)
        if (f.boundary()) boundary_only += f.tau * w[f.owner];
      worst_anti = std::max(worst_anti, std::abs(total - boundary_only) / (std::abs(boundary_only) + 1e-30));
    }
    gate("norm identity (constant interpolant)", worst_norm, 1e-10);
    gate("seminorm-gradient identity", worst_semi, 1e-10);
    gate("interpolant norm bound", worst_bound, 1e-12);
    gate("flux divergence identity", worst_anti, 1e-10);
  }
  std::printf("verify: %s\n", ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite volume solver for coupled heat / phase-field solidification"};
  app.require_subcommand(1);

  auto* check = app.add_subcommand("check-mesh", "validate a PFVM-MESH file and print its metrics");
  std::string mesh_path;
  double tol = 1e-9, angle_tol = 1e-9;
  check->add_option("mesh", mesh_path, "mesh file")->required();
  check->add_option("--tol", tol, "relative tolerance");
  check->add_option("--angle-tol", angle_tol, "orthogonality tolerance in radians");

  auto* verify = app.add_subcommand("verify", "run the mesh/interpolation identity suites");
  unsigned long long seed = 7;
  verify->add_option("--seed", seed, "random seed");

  auto* run = app.add_subcommand("run", "integrate a configured problem and write outputs");
  std::string run_config;
  run->add_option("--config", run_config, "JSON config file")->required();

  auto* study = app.add_subcommand("study", "mesh-refinement convergence study");
  std::string study_config;
  int levels = 0;
  study->add_option("--config", study_config, "JSON config file")->required();
  study->add_option("--levels", levels, "refinement levels (default: study_levels from config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (check->parsed()) return run_check_mesh(mesh_path, tol, angle_tol);
    if (verify->parsed()) return run_verify(seed);
    if (run->parsed()) {
      RunConfig cfg = parse_config(run_config);
      RunOutputs out = run_and_write(cfg);
      std::printf("wrote %zu files to %s (%d steps)\n", out.files.size(), out.directory.c_str(),
                  out.steps);
      return kExitOk;
    }
    if (study->parsed()) {
      RunConfig cfg = parse_config(study_config);
      int n = levels > 0 ? levels : cfg.study_levels;
      RunOutputs out = study_and_write(cfg, n);
      std::printf("wrote %zu files to %s\n", out.files.size(), out.directory.c_str());
      return kExitOk;
    }
  } catch (const BlowupError& e) {
    std::fprintf(stderr, "blowup: %s\n", e.what());
    return kExitBlowup;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
