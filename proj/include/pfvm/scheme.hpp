#pragma once

#include <functional>
#include <optional>

#include "pfvm/interp.hpp"
#include "pfvm/mesh.hpp"
#include "pfvm/model.hpp"

namespace pfvm {

/// Additive per-cell sources sampled at the significant points; both enter
/// the equations at the same level as the other reaction terms (the phase
/// source sits inside the bracket that is divided by relax). The optional
/// batch evaluator fills whole per-cell arrays and takes precedence in the
/// residual sweep; it must sample the same functions.
struct SourceTerms {
  std::function<double(const Vec3&, double)> u;
  std::function<double(const Vec3&, double)> p;
  std::function<void(const Mesh&, double, double*, double*)> batch;
};

/// Discrete state at one time instant; derivative caches are filled by the
/// integrator so estimate bookkeeping never re-evaluates the right-hand side.
struct SolverState {
  double t = 0.0;
  MeshFunction u;
  MeshFunction p;
  MeshFunction udot;
  MeshFunction pdot;
  bool derivatives_cached = false;
};

/// Boundary values of the field being fluxed; an empty function means
/// homogeneous Dirichlet data.
using BoundaryValues = std::function<double(const Vec3&)>;

/// Two-point flux sum F_K over the faces of one cell: interior faces
/// contribute -tau (w_L - w_K), boundary faces -tau (w_bd(y) - w_K).
double cell_flux(const MeshFunction& w, const BoundaryValues& wb, int cell);

/// F_K for every cell in one sweep (face-major, fixed order).
void cell_flux_all(const MeshFunction& w, const BoundaryValues& wb, std::vector<double>& out);

/// Coupled right-hand side: solves the phase equation for pdot first and
/// substitutes it into the heat equation, which is exact for this pairing.
void semi_discrete_rhs(const ModelParams& params, const BoundaryData& bdata,
                       const SourceTerms* sources, double t, const MeshFunction& u,
                       const MeshFunction& p, MeshFunction& udot, MeshFunction& pdot);

/// Explicit-step bound combining the per-cell transmissibility sum, the
/// reaction stiffness over [-1/2, 3/2] and the coupling Lipschitz bound.
double stable_dt(const Mesh& mesh, const ModelParams& params, double safety = 0.5);

enum class Integrator { ExplicitEuler, Rk4 };

/// One explicit step; reuses the cached derivative of the input state when
/// present and caches the derivative of the returned state.
SolverState advance(const SolverState& state, double dt, Integrator method,
                    const ModelParams& params, const BoundaryData& bdata,
                    const SourceTerms* sources = nullptr);

/// Fills the derivative cache of a freshly constructed state.
void prime_derivatives(SolverState& state, const ModelParams& params, const BoundaryData& bdata,
                       const SourceTerms* sources = nullptr);

}  // namespace pfvm
