#pragma once

#include <vector>

#include "pfvm/interp.hpp"
#include "pfvm/model.hpp"
#include "pfvm/scheme.hpp"

namespace pfvm {

// ---------------------------------------------------------------------------
// Smooth compactly supported test fields

/// Tensor-product bump: product over axes of exp(-1/(1-s^2)) with
/// s = (x - center)/halfwidth, identically zero outside the open box.
struct BumpField {
  Vec3 center{0.5, 0.5, 0.5};
  Vec3 halfwidth{0.35, 0.35, 0.35};
  double amplitude = 1.0;

  double value(const Vec3& x) const;
  Vec3 gradient(const Vec3& x) const;
  double laplacian(const Vec3& x) const;
};

/// 1D bump in time supported on the open interval (t0, t1).
struct TimeBump {
  double t0 = 0.0;
  double t1 = 1.0;

  double value(double t) const;
  double derivative(double t) const;
};

// ---------------------------------------------------------------------------
// Quadrature helpers (shared by the residual evaluators)

/// Integral of a smooth function over one cell: tensor Gauss-Legendre with
/// points_per_axis nodes on box cells (applied per sub-box when
/// subdivisions > 1), a degree-2 tetrahedral rule on general convex cells.
double cell_integral(const Mesh& mesh, int cell, const std::function<double(const Vec3&)>& f,
                     int points_per_axis = 3, int subdivisions = 1);

/// Integral of a smooth vector field over one dual cell (apex-fan
/// tetrahedra, degree-2 rule).
Vec3 dual_cell_vector_integral(const DualMesh& dual, int dual_index,
                               const std::function<Vec3(const Vec3&)>& f);

// ---------------------------------------------------------------------------
// Energy ledger and the a priori bound

struct LedgerRow {
  double t = 0.0;
  double norm2_pdot = 0.0;
  double norm2_udot = 0.0;
  double semi2_p = 0.0;
  double semi2_u = 0.0;
  double well_energy = 0.0;
  double int_pdot = 0.0;  ///< running trapezoid integral of norm2_pdot
  double int_udot = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
};

/// Which coefficient multiplies the integrated udot norm on the bound's left
/// side; the two readings differ by a factor of two and the printed one is
/// the default.
enum class EstimateConvention { Printed, Tight };

/// Time series of the discrete energy terms on both sides of the a priori
/// bound, plus the static components fixed by the initial data.
class EstimateLedger {
 public:
  EstimateLedger(const ModelParams& params, const SolverState& initial);

  /// Appends one row; the state must carry cached derivatives.
  const LedgerRow& append(const SolverState& state);

  const std::vector<LedgerRow>& rows() const { return rows_; }
  const ModelParams& params() const { return params_; }
  double initial_semi2_p() const { return initial_semi2_p_; }
  double initial_semi2_u() const { return initial_semi2_u_; }
  double initial_well() const { return initial_well_; }
  double limiter_bound() const { return limiter_bound_; }
  double well_constant() const { return well_constant_; }
  double domain_volume() const { return domain_volume_; }
  /// Constant source term of the bound: (b beta)^2 B^2 m(Omega) / (2 alpha).
  double source_constant() const;

  double lhs_at(const LedgerRow& row, EstimateConvention convention) const;
  double rhs_at(double t) const;

 private:
  ModelParams params_;
  double initial_semi2_p_ = 0.0;
  double initial_semi2_u_ = 0.0;
  double initial_well_ = 0.0;
  double limiter_bound_ = 0.0;
  double well_constant_ = 0.0;
  double domain_volume_ = 0.0;
  std::vector<LedgerRow> rows_;
};

/// Convenience: one ledger row's worth of terms for a standalone state.
LedgerRow energy_terms(const SolverState& state);

struct MarginReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool ok = false;
};

/// Evaluates the a priori bound at final time T from the ledger's raw
/// columns; a negative margin is reported, not thrown.
MarginReport apriori_bound_check(const EstimateLedger& ledger, const ModelParams& params, double T,
                                 EstimateConvention convention = EstimateConvention::Printed);

struct StepEnergyReport {
  bool ok = true;
  double worst_excess = 0.0;  ///< max over intervals of dE - source*dt - budget
  int worst_interval = -1;
};

/// Per-interval dissipation inequality: the discrete energy may grow at most
/// by the constant source rate, up to an O(dt^2)-per-step integration budget.
StepEnergyReport step_energy_check(const EstimateLedger& ledger, double dt_step, double T);

// ---------------------------------------------------------------------------
// Flux consistency (discrete flux pairing vs. integrated Laplacian)

struct FluxConsistency {
  double discrete = 0.0;    ///< sum over cells of q(x_K) F_K(p)
  double integrated = 0.0;  ///< -integral of (S p) laplacian(q)
  double residual = 0.0;    ///< |discrete - integrated|
};

/// Requires the support of q to sit strictly inside the domain. The bump's
/// derivatives grow quickly toward its support edge, so the default rule is
/// deliberately strong.
FluxConsistency flux_consistency(const MeshFunction& p, const BumpField& q,
                                 int points_per_axis = 4, int subdivisions = 2);

// ---------------------------------------------------------------------------
// Weak-form residuals over a trajectory

struct Trajectory {
  const Mesh* mesh = nullptr;
  std::vector<double> times;
  std::vector<std::vector<double>> u;
  std::vector<std::vector<double>> p;

  void record(const SolverState& state) {
    times.push_back(state.t);
    u.push_back(state.u.values());
    p.push_back(state.p.values());
  }
};

struct WeakResiduals {
  double heat = 0.0;
  double phase = 0.0;
};

/// Assembles both weak-form identities over the trajectory with the
/// piecewise-constant interpolant in the L2 pairings and the axial-linear
/// gradient in the gradient pairings; time integrals by trapezoid over the
/// stored snapshots.
WeakResiduals weak_residual(const Trajectory& traj, const ModelParams& params,
                            const SourceTerms* sources, const BumpField& v_heat,
                            const BumpField& q_phase, const TimeBump& psi, const TimeBump& phi);

}  // namespace pfvm
