#pragma once

#include <string>

#include "pfvm/analysis.hpp"
#include "pfvm/config.hpp"
#include "pfvm/output.hpp"

namespace pfvm {

/// Named analytic problem: exact fields plus the additive sources that make
/// them an exact solution of the forced system.
struct AnalyticProblem {
  std::function<double(const Vec3&, double)> u;
  std::function<double(const Vec3&, double)> p;
  SourceTerms sources;
};

/// Registry of analytic problems ("mms-trig": trigonometric fields with
/// vanishing boundary values and normal derivatives).
AnalyticProblem analytic_problem(const std::string& id, const ModelParams& params,
                                 const std::array<double, 3>& extents);

Mesh build_mesh(const MeshSpec& spec);
/// level 0 is the configured mesh, each further level halves the spacings.
Mesh build_mesh_level(const MeshSpec& spec, int level);

MeshFunction initial_u(const RunConfig& config, const Mesh& mesh);
MeshFunction initial_p(const RunConfig& config, const Mesh& mesh);

class SnapshotSink {
 public:
  virtual ~SnapshotSink() = default;
  virtual void on_snapshot(const SolverState& state, const LedgerRow& row) = 0;
};

struct RunResult {
  SolverState final_state;
  EstimateLedger ledger;
  double dt = 0.0;
  int steps = 0;
};

/// Integrates the configured problem over (0, T] on the given mesh, emitting
/// a ledger row (and sink callback) every snapshot_cadence steps plus the
/// initial and final instants. T = 0 yields only the initial snapshot.
RunResult run_simulation(const RunConfig& config, const Mesh& mesh, SnapshotSink* sink = nullptr);
RunResult run_simulation(const RunConfig& config, SnapshotSink* sink = nullptr);

/// Space-time L2 distance between two piecewise-constant trajectories with
/// identical snapshot times; exact when the meshes are nested, otherwise a
/// midpoint-sampled approximation on the finer mesh.
double trajectory_l2_diff(const Trajectory& fine, const Trajectory& coarse, bool use_u);

/// Space-time L2 error against an analytic field, sampled at the significant
/// points (the discrete norm of the nodal error); use_u selects the field.
double trajectory_l2_error(const Trajectory& traj,
                           const std::function<double(const Vec3&, double)>& exact, bool use_u);

/// Runs the problem on `levels` meshes with halved spacings, comparing either
/// against the manufactured solution (config.forcing set) or successive
/// levels, and attaching the flux-consistency residual of the final phase
/// field per level.
ConvergenceTable refinement_study(const RunConfig& config, int levels);

struct RunOutputs {
  std::vector<std::string> files;   ///< everything written, manifest last
  std::string directory;
  int steps = 0;
  bool blew_up = false;
};

/// Full on-disk run: VTK snapshot per ledger row, ledger.csv, manifest.txt.
/// A blowup still writes the partial ledger and manifest before rethrowing.
RunOutputs run_and_write(const RunConfig& config);

/// Full on-disk study: study.csv plus manifest.txt in the output directory.
RunOutputs study_and_write(const RunConfig& config, int levels);

}  // namespace pfvm
