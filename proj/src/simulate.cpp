#include "pfvm/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "pfvm/errors.hpp"

namespace pfvm {

namespace {

constexpr double kTanhWidthFactor = 2.0 * std::numbers::sqrt2;
constexpr int kStudySnapshots = 10;

std::array<double, 3> mesh_extents(const Mesh& mesh) {
  if (mesh.box) return mesh.box->extents;
  Vec3 lo = mesh.vertices.front(), hi = mesh.vertices.front();
  for (const Vec3& v : mesh.vertices)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], v[a]);
      hi[a] = std::max(hi[a], v[a]);
    }
  return {hi.x - lo.x, hi.y - lo.y, hi.z - lo.z};
}

}  // namespace

AnalyticProblem analytic_problem(const std::string& id, const ModelParams& params,
                                 const std::array<double, 3>& extents) {
  if (id != "mms-trig") throw InputError("unknown analytic problem id: " + id);

  const double omega = 2.0 * std::numbers::pi;
  const std::array<double, 3> e = extents;

  auto shape = [e](const Vec3& x) {
    double s = 1.0;
    for (int a = 0; a < 3; ++a) {
      double v = std::sin(std::numbers::pi * x[a] / e[a]);
      s *= v * v;
    }
    return s;
  };
  auto shape_lap = [e](const Vec3& x) {
    double sq[3];
    for (int a = 0; a < 3; ++a) {
      double v = std::sin(std::numbers::pi * x[a] / e[a]);
      sq[a] = v * v;
    }
    double lap = 0.0;
    for (int a = 0; a < 3; ++a) {
      double k = std::numbers::pi / e[a];
      double others = 1.0;
      for (int b = 0; b < 3; ++b)
        if (b != a) others *= sq[b];
      lap += 2.0 * k * k * std::cos(2.0 * std::numbers::pi * x[a] / e[a]) * others;
    }
    return lap;
  };

  auto theta_u = [omega](double t) { return 0.8 * std::cos(omega * t + 0.4); };
  auto theta_u_dot = [omega](double t) { return -0.8 * omega * std::sin(omega * t + 0.4); };
  auto theta_p = [omega](double t) { return 0.75 + 0.25 * std::sin(omega * t + 0.3); };
  auto theta_p_dot = [omega](double t) { return 0.25 * omega * std::cos(omega * t + 0.3); };

  AnalyticProblem prob;
  prob.u = [=](const Vec3& x, double t) { return theta_u(t) * shape(x); };
  prob.p = [=](const Vec3& x, double t) { return theta_p(t) * shape(x); };

  const ModelParams mp = params;
  prob.sources.u = [=](const Vec3& x, double t) {
    double s = shape(x);
    return theta_u_dot(t) * s - theta_u(t) * shape_lap(x) - mp.latent_heat * theta_p_dot(t) * s;
  };
  prob.sources.p = [=](const Vec3& x, double t) {
    double s = shape(x);
    double pstar = theta_p(t) * s;
    double ustar = theta_u(t) * s;
    return mp.relax * theta_p_dot(t) * s - theta_p(t) * shape_lap(x) -
           reaction_cubic(pstar) / (mp.xi * mp.xi) -
           mp.coupling_sign * mp.b * mp.beta / mp.xi * limiter(mp.g(ustar, pstar), mp.knots);
  };

  // Batch evaluator: the spatial profile and its Laplacian are sampled once
  // per mesh, leaving a handful of flops per cell inside the stage loop.
  struct ShapeCache {
    const Mesh* key = nullptr;
    std::vector<double> shape, lap;
  };
  auto cache = std::make_shared<ShapeCache>();
  prob.sources.batch = [=](const Mesh& mesh, double t, double* su, double* sp) {
    if (cache->key != &mesh) {
      const int nc = mesh.n_cells();
      cache->shape.resize(nc);
      cache->lap.resize(nc);
      for (int c = 0; c < nc; ++c) {
        cache->shape[c] = shape(mesh.cells[c].point);
        cache->lap[c] = shape_lap(mesh.cells[c].point);
      }
      cache->key = &mesh;
    }
    const double tu = theta_u(t), tud = theta_u_dot(t);
    const double tp = theta_p(t), tpd = theta_p_dot(t);
    const double inv_xi_sq = 1.0 / (mp.xi * mp.xi);
    const double coupling = mp.coupling_sign * mp.b * mp.beta / mp.xi;
    const bool drive_is_u = mp.g_name == "u";
    const int nc = mesh.n_cells();
    const double* S = cache->shape.data();
    const double* Lap = cache->lap.data();
    for (int c = 0; c < nc; ++c) {
      su[c] = tud * S[c] - tu * Lap[c] - mp.latent_heat * tpd * S[c];
      double pstar = tp * S[c];
      double ustar = tu * S[c];
      double drive = drive_is_u ? ustar : mp.g(ustar, pstar);
      sp[c] = mp.relax * tpd * S[c] - tp * Lap[c] - reaction_cubic(pstar) * inv_xi_sq -
              coupling * limiter(drive, mp.knots);
    }
  };
  return prob;
}

Mesh build_mesh(const MeshSpec& spec) { return build_mesh_level(spec, 0); }

Mesh build_mesh_level(const MeshSpec& spec, int level) {
  if (level < 0) throw InputError("mesh level must be nonnegative");
  if (spec.kind == MeshSpec::Kind::File) {
    if (level > 0) throw InputError("file meshes cannot be refined");
    return load_mesh(spec.path);
  }
  std::array<std::vector<double>, 3> spacings;
  if (spec.spacings) {
    spacings = *spec.spacings;
  } else {
    for (int a = 0; a < 3; ++a) {
      spacings[a].resize(spec.cells[a] + 1);
      for (int i = 0; i <= spec.cells[a]; ++i)
        spacings[a][i] = spec.extents[a] * i / spec.cells[a];
    }
  }
  for (int l = 0; l < level; ++l) {
    for (int a = 0; a < 3; ++a) {
      std::vector<double> refined;
      refined.reserve(2 * spacings[a].size() - 1);
      for (size_t i = 0; i + 1 < spacings[a].size(); ++i) {
        refined.push_back(spacings[a][i]);
        refined.push_back(0.5 * (spacings[a][i] + spacings[a][i + 1]));
      }
      refined.push_back(spacings[a].back());
      spacings[a] = std::move(refined);
    }
  }
  return generate_box_mesh(spec.extents, spacings);
}

namespace {

std::function<double(const Vec3&)> envelope(const std::array<double, 3>& extents) {
  return [extents](const Vec3& x) {
    double s = 1.0;
    for (int a = 0; a < 3; ++a) s *= std::sin(std::numbers::pi * x[a] / extents[a]);
    return s;
  };
}

}  // namespace

MeshFunction initial_p(const RunConfig& config, const Mesh& mesh) {
  const InitialSpec& ini = config.initial;
  const double width = kTanhWidthFactor * config.params.xi;
  switch (ini.kind) {
    case InitialSpec::Kind::PlanarFront: {
      Vec3 n = normalized(ini.normal);
      return project(mesh, [&](const Vec3& x) {
        return 0.5 * (1.0 - std::tanh((dot(x, n) - ini.position) / width));
      });
    }
    case InitialSpec::Kind::SphericalNucleus:
      return project(mesh, [&](const Vec3& x) {
        return 0.5 * (1.0 - std::tanh((distance(x, ini.center) - ini.radius) / width));
      });
    case InitialSpec::Kind::Expression: {
      AnalyticProblem prob = analytic_problem(ini.expression_id, config.params, mesh_extents(mesh));
      return project(mesh, [&](const Vec3& x) { return prob.p(x, 0.0); });
    }
  }
  throw InputError("unhandled initial condition");
}

MeshFunction initial_u(const RunConfig& config, const Mesh& mesh) {
  const InitialSpec& ini = config.initial;
  if (ini.kind == InitialSpec::Kind::Expression) {
    AnalyticProblem prob = analytic_problem(ini.expression_id, config.params, mesh_extents(mesh));
    return project(mesh, [&](const Vec3& x) { return prob.u(x, 0.0); });
  }
  // undercooled melt with walls held at the transition temperature
  auto env = envelope(mesh_extents(mesh));
  const double amplitude = ini.undercooling;
  return project(mesh, [&](const Vec3& x) { return -amplitude * env(x); });
}

RunResult run_simulation(const RunConfig& config, const Mesh& mesh, SnapshotSink* sink) {
  config.params.validate();
  if (config.boundary != "homogeneous")
    throw InputError("only homogeneous boundary data is available");

  SourceTerms sources;
  const SourceTerms* sources_ptr = nullptr;
  if (config.forcing != "none") {
    sources = analytic_problem(config.forcing, config.params, mesh_extents(mesh)).sources;
    sources_ptr = &sources;
  }
  BoundaryData bdata = BoundaryData::zero();

  SolverState state;
  state.t = 0.0;
  state.u = initial_u(config, mesh);
  state.p = initial_p(config, mesh);
  prime_derivatives(state, config.params, bdata, sources_ptr);

  double dt = config.dt.kind == DtPolicy::Kind::Fixed
                  ? config.dt.value
                  : stable_dt(mesh, config.params, config.dt.safety);
  int steps = config.end_time > 0.0
                  ? static_cast<int>(std::ceil(config.end_time / dt - 1e-9))
                  : 0;
  if (steps > 0) dt = config.end_time / steps;

  EstimateLedger ledger(config.params, state);
  const LedgerRow& first = ledger.append(state);
  if (sink) sink->on_snapshot(state, first);

  for (int i = 1; i <= steps; ++i) {
    state = advance(state, dt, config.integrator, config.params, bdata, sources_ptr);
    if (i % config.snapshot_cadence == 0 || i == steps) {
      const LedgerRow& row = ledger.append(state);
      if (sink) sink->on_snapshot(state, row);
    }
  }
  return {std::move(state), std::move(ledger), dt, steps};
}

RunResult run_simulation(const RunConfig& config, SnapshotSink* sink) {
  Mesh mesh = build_mesh(config.mesh);
  return run_simulation(config, mesh, sink);
}

double trajectory_l2_diff(const Trajectory& fine, const Trajectory& coarse, bool use_u) {
  if (!fine.mesh || !coarse.mesh) throw InputError("trajectories need meshes");
  if (fine.times.size() != coarse.times.size())
    throw InputError("trajectories have different snapshot counts");
  const Mesh& fm = *fine.mesh;
  const Mesh& cm = *coarse.mesh;

  std::vector<int> parent(fm.n_cells());
  for (int c = 0; c < fm.n_cells(); ++c) {
    parent[c] = cm.locate_cell(fm.cells[c].point);
    if (parent[c] < 0) throw InputError("fine cell center not found in the coarse mesh");
  }

  double integral = 0.0, prev = 0.0;
  for (size_t i = 0; i < fine.times.size(); ++i) {
    if (std::abs(fine.times[i] - coarse.times[i]) > 1e-9 * (1.0 + std::abs(fine.times[i])))
      throw InputError("trajectory snapshot times do not match");
    const std::vector<double>& wf = use_u ? fine.u[i] : fine.p[i];
    const std::vector<double>& wc = use_u ? coarse.u[i] : coarse.p[i];
    double s = 0.0;
    for (int c = 0; c < fm.n_cells(); ++c) {
      double d = wf[c] - wc[parent[c]];
      s += fm.cells[c].volume * d * d;
    }
    if (i > 0) integral += 0.5 * (prev + s) * (fine.times[i] - fine.times[i - 1]);
    prev = s;
  }
  return std::sqrt(integral);
}

double trajectory_l2_error(const Trajectory& traj,
                           const std::function<double(const Vec3&, double)>& exact, bool use_u) {
  if (!traj.mesh || traj.times.empty()) throw InputError("empty trajectory");
  const Mesh& mesh = *traj.mesh;
  double integral = 0.0, prev = 0.0;
  for (size_t i = 0; i < traj.times.size(); ++i) {
    const std::vector<double>& w = use_u ? traj.u[i] : traj.p[i];
    double s = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
      double d = w[c] - exact(mesh.cells[c].point, traj.times[i]);
      s += mesh.cells[c].volume * d * d;
    }
    if (i > 0) integral += 0.5 * (prev + s) * (traj.times[i] - traj.times[i - 1]);
    prev = s;
  }
  return std::sqrt(integral);
}

ConvergenceTable refinement_study(const RunConfig& config, int levels) {
  if (levels < 1) throw InputError("study needs at least one level");
  if (config.mesh.kind == MeshSpec::Kind::File && levels > 1)
    throw InputError("file meshes cannot be refined; use a box mesh for studies");

  const bool mms = config.forcing != "none";

  ConvergenceTable table;
  Trajectory previous;
  Mesh previous_mesh;
  double prev_diff_u = 0.0, prev_diff_p = 0.0;

  for (int level = 0; level < levels; ++level) {
    Mesh mesh = build_mesh_level(config.mesh, level);

    RunConfig cfg = config;
    // aligned snapshot times across levels
    double dt = cfg.dt.kind == DtPolicy::Kind::Fixed ? cfg.dt.value
                                                     : stable_dt(mesh, cfg.params, cfg.dt.safety);
    int steps = static_cast<int>(std::ceil(cfg.end_time / dt - 1e-9));
    steps = ((steps + kStudySnapshots - 1) / kStudySnapshots) * kStudySnapshots;
    cfg.dt = {DtPolicy::Kind::Fixed, cfg.end_time / steps, 0.5};
    cfg.snapshot_cadence = steps / kStudySnapshots;

    struct Recorder : SnapshotSink {
      Trajectory traj;
      void on_snapshot(const SolverState& state, const LedgerRow&) override { traj.record(state); }
    } recorder;
    recorder.traj.mesh = &mesh;

    RunResult result = run_simulation(cfg, mesh, &recorder);

    StudyRow row;
    row.level = level;
    row.mesh_norm = mesh_metrics(mesh).mesh_norm;

    if (mms) {
      AnalyticProblem prob = analytic_problem(config.forcing, config.params, mesh_extents(mesh));
      double eu = 0.0, ep = 0.0, prev_eu = 0.0, prev_ep = 0.0;
      const Trajectory& traj = recorder.traj;
      for (size_t i = 0; i < traj.times.size(); ++i) {
        double su = 0.0, sp = 0.0;
        double t = traj.times[i];
        for (int c = 0; c < mesh.n_cells(); ++c) {
          const Vec3& x = mesh.cells[c].point;
          double du = traj.u[i][c] - prob.u(x, t);
          double dp = traj.p[i][c] - prob.p(x, t);
          su += mesh.cells[c].volume * du * du;
          sp += mesh.cells[c].volume * dp * dp;
        }
        if (i > 0) {
          double dtt = traj.times[i] - traj.times[i - 1];
          eu += 0.5 * (prev_eu + su) * dtt;
          ep += 0.5 * (prev_ep + sp) * dtt;
        }
        prev_eu = su;
        prev_ep = sp;
      }
      row.diff_u = std::sqrt(eu);
      row.diff_p = std::sqrt(ep);
      if (level > 0) {
        row.order_u = std::log2(prev_diff_u / row.diff_u);
        row.order_p = std::log2(prev_diff_p / row.diff_p);
      }
      prev_diff_u = row.diff_u;
      prev_diff_p = row.diff_p;
    } else if (level > 0) {
      previous.mesh = &previous_mesh;
      row.diff_u = trajectory_l2_diff(recorder.traj, previous, true);
      row.diff_p = trajectory_l2_diff(recorder.traj, previous, false);
      if (level > 1) {
        row.order_u = std::log2(prev_diff_u / row.diff_u);
        row.order_p = std::log2(prev_diff_p / row.diff_p);
      }
      prev_diff_u = row.diff_u;
      prev_diff_p = row.diff_p;
    }

    BumpField q;
    std::array<double, 3> ext = mesh_extents(mesh);
    q.center = {0.5 * ext[0], 0.5 * ext[1], 0.5 * ext[2]};
    q.halfwidth = {0.35 * ext[0], 0.35 * ext[1], 0.35 * ext[2]};
    row.flux_residual = flux_consistency(result.final_state.p, q).residual;

    table.rows.push_back(row);

    if (!mms) {
      previous = std::move(recorder.traj);
      previous_mesh = std::move(mesh);
      previous.mesh = &previous_mesh;
    }
  }
  return table;
}

namespace {

std::string snapshot_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%04d.vtk", index);
  return buf;
}

}  // namespace

RunOutputs run_and_write(const RunConfig& config) {
  namespace fs = std::filesystem;
  RunOutputs out;
  out.directory = config.output_dir;
  fs::create_directories(config.output_dir);

  struct Writer : SnapshotSink {
    const Mesh* mesh = nullptr;
    std::string dir;
    std::vector<LedgerRow> rows;
    std::vector<std::string> files;
    int index = 0;

    void on_snapshot(const SolverState& state, const LedgerRow& row) override {
      rows.push_back(row);
      std::string name = snapshot_name(index++);
      char title[64];
      std::snprintf(title, sizeof title, "fields at t=%.17g", state.t);
      write_vtk_snapshot(*mesh, state.u, state.p, dir + "/" + name, title);
      files.push_back(name);
    }
  } writer;

  Mesh mesh = build_mesh(config.mesh);
  writer.mesh = &mesh;
  writer.dir = config.output_dir;

  auto finish = [&](const std::vector<LedgerRow>& rows) {
    write_ledger_csv(rows, config.output_dir + "/ledger.csv");
    writer.files.push_back("ledger.csv");

    Manifest manifest;
    for (const std::string& name : writer.files)
      manifest.add(config.output_dir + "/" + name, name);
    manifest.write(config.output_dir + "/manifest.txt");
    writer.files.push_back("manifest.txt");
    out.files = writer.files;
  };

  try {
    RunResult result = run_simulation(config, mesh, &writer);
    out.steps = result.steps;
    finish(result.ledger.rows());
  } catch (const BlowupError&) {
    out.blew_up = true;
    finish(writer.rows);
    throw;
  }
  return out;
}

RunOutputs study_and_write(const RunConfig& config, int levels) {
  namespace fs = std::filesystem;
  RunOutputs out;
  out.directory = config.output_dir;
  fs::create_directories(config.output_dir);

  ConvergenceTable table = refinement_study(config, levels);
  write_study_csv(table, config.output_dir + "/study.csv");
  Manifest manifest;
  manifest.add(config.output_dir + "/study.csv", "study.csv");
  manifest.write(config.output_dir + "/manifest.txt");
  out.files = {"study.csv", "manifest.txt"};
  return out;
}

}  // namespace pfvm
