#include "pfvm/scheme.hpp"

#include <cmath>

#include "pfvm/errors.hpp"

namespace pfvm {

double cell_flux(const MeshFunction& w, const BoundaryValues& wb, int cell) {
  const Mesh& mesh = w.mesh();
  double flux = 0.0;
  for (int f : mesh.cell_faces(cell)) {
    const Face& face = mesh.faces[f];
    if (face.boundary()) {
      double bv = wb ? wb(face.foot) : 0.0;
      flux += -face.tau * (bv - w[cell]);
    } else {
      int other = face.owner == cell ? face.neighbor : face.owner;
      flux += -face.tau * (w[other] - w[cell]);
    }
  }
  return flux;
}

namespace {

// Structured 7-point sweep for rectilinear meshes with homogeneous boundary
// data: cell-major, unit stride, no face table traffic. Ghost values are
// zero, so wall faces reduce to the same difference formula.
void box_flux_sweep(const Mesh& mesh, const double* w, double* out) {
  const BoxStructure& box = *mesh.box;
  const int nx = box.dims[0], ny = box.dims[1], nz = box.dims[2];
  const std::vector<double>& idx = mesh.box_inverse_distances()[0];
  const std::vector<double>& idy = mesh.box_inverse_distances()[1];
  const std::vector<double>& idz = mesh.box_inverse_distances()[2];
  const std::vector<double>& wx = mesh.box_widths()[0];
  const std::vector<double>& wy = mesh.box_widths()[1];
  const std::vector<double>& wz = mesh.box_widths()[2];

  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      const int row = (k * ny + j) * nx;
      const double ayz = wy[j] * wz[k];
      const double axz_lo = wz[k] * idy[j], axz_hi = wz[k] * idy[j + 1];
      const double axy_lo = wy[j] * idz[k], axy_hi = wy[j] * idz[k + 1];
      const double* wm_y = j > 0 ? w + row - nx : nullptr;
      const double* wp_y = j + 1 < ny ? w + row + nx : nullptr;
      const double* wm_z = k > 0 ? w + row - nx * ny : nullptr;
      const double* wp_z = k + 1 < nz ? w + row + nx * ny : nullptr;
      for (int i = 0; i < nx; ++i) {
        const int c = row + i;
        const double wc = w[c];
        double acc = ayz * (idx[i] * (wc - (i > 0 ? w[c - 1] : 0.0)) +
                            idx[i + 1] * (wc - (i + 1 < nx ? w[c + 1] : 0.0)));
        acc += wx[i] * (axz_lo * (wc - (wm_y ? wm_y[i] : 0.0)) +
                        axz_hi * (wc - (wp_y ? wp_y[i] : 0.0)));
        acc += wx[i] * (axy_lo * (wc - (wm_z ? wm_z[i] : 0.0)) +
                        axy_hi * (wc - (wp_z ? wp_z[i] : 0.0)));
        out[c] = acc;
      }
    }
  }
}

void flux_sweep(const Mesh& mesh, const double* w, const BoundaryValues& wb, double* out) {
  if (mesh.box && !wb) {
    box_flux_sweep(mesh, w, out);
    return;
  }
  const int nc = mesh.n_cells();
  for (int c = 0; c < nc; ++c) out[c] = 0.0;
  for (const InteriorFlux& f : mesh.interior_flux()) {
    double flux = -f.tau * (w[f.neighbor] - w[f.owner]);
    out[f.owner] += flux;
    out[f.neighbor] -= flux;
  }
  if (wb) {
    for (const BoundaryFlux& f : mesh.boundary_flux())
      out[f.owner] += -f.tau * (wb(f.foot) - w[f.owner]);
  } else {
    for (const BoundaryFlux& f : mesh.boundary_flux()) out[f.owner] += f.tau * w[f.owner];
  }
}

void rhs_raw(const Mesh& mesh, const ModelParams& params, const BoundaryData& bdata,
             const SourceTerms* sources, double t, const double* u, const double* p, double* udot,
             double* pdot) {
  const int nc = mesh.n_cells();
  static thread_local std::vector<double> flux_u, flux_p, src_u, src_p;
  flux_u.resize(nc);
  flux_p.resize(nc);
  flux_sweep(mesh, u, bdata.homogeneous ? BoundaryValues{} : bdata.u, flux_u.data());
  flux_sweep(mesh, p, bdata.homogeneous ? BoundaryValues{} : bdata.p, flux_p.data());

  const double* src_u_ptr = nullptr;
  const double* src_p_ptr = nullptr;
  if (sources) {
    src_u.resize(nc);
    src_p.resize(nc);
    if (sources->batch) {
      sources->batch(mesh, t, src_u.data(), src_p.data());
    } else {
      for (int c = 0; c < nc; ++c) {
        const Vec3& x = mesh.cells[c].point;
        src_u[c] = sources->u ? sources->u(x, t) : 0.0;
        src_p[c] = sources->p ? sources->p(x, t) : 0.0;
      }
    }
    src_u_ptr = src_u.data();
    src_p_ptr = src_p.data();
  }

  const double inv_xi_sq = 1.0 / (params.xi * params.xi);
  const double coupling = params.coupling_sign * params.b * params.beta / params.xi;
  const double inv_relax = 1.0 / params.relax;
  const double L = params.latent_heat;
  const LimiterKnots knots = params.knots;
  const bool drive_is_u = params.g_name == "u";
  const double* inv_vol = mesh.inverse_volumes().data();

  int bad_cell = -1;
  for (int c = 0; c < nc; ++c) {
    double drive = drive_is_u ? u[c] : params.g(u[c], p[c]);
    double reaction = inv_xi_sq * reaction_cubic(p[c]) + coupling * limiter(drive, knots);
    if (src_p_ptr) reaction += src_p_ptr[c];
    double pd = (reaction - flux_p[c] * inv_vol[c]) * inv_relax;
    double ud = L * pd - flux_u[c] * inv_vol[c];
    if (src_u_ptr) ud += src_u_ptr[c];
    pdot[c] = pd;
    udot[c] = ud;
    if (!std::isfinite(pd) || !std::isfinite(ud)) {
      bad_cell = c;
      break;
    }
  }
  if (bad_cell >= 0) throw BlowupError("non-finite right-hand side", bad_cell, t);
}

}  // namespace

void cell_flux_all(const MeshFunction& w, const BoundaryValues& wb, std::vector<double>& out) {
  out.resize(w.mesh().n_cells());
  flux_sweep(w.mesh(), w.data(), wb, out.data());
}

void semi_discrete_rhs(const ModelParams& params, const BoundaryData& bdata,
                       const SourceTerms* sources, double t, const MeshFunction& u,
                       const MeshFunction& p, MeshFunction& udot, MeshFunction& pdot) {
  const Mesh& mesh = u.mesh();
  if (&p.mesh() != &mesh) throw InputError("state fields live on different meshes");
  rhs_raw(mesh, params, bdata, sources, t, u.data(), p.data(), udot.data(), pdot.data());
}

double stable_dt(const Mesh& mesh, const ModelParams& params, double safety) {
  if (!(safety > 0.0 && safety <= 1.0)) throw InputError("safety factor must be in (0, 1]");

  double diffusion = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    double tau_sum = 0.0;
    for (int f : mesh.cell_faces(c)) tau_sum += mesh.faces[f].tau;
    diffusion = std::max(diffusion, tau_sum / (params.relax * mesh.cells[c].volume));
  }

  // |d/dp reaction_cubic| on [-1/2, 3/2]: quadratic, so the extrema sit at
  // the interval ends and the vertex.
  auto slope = [](double p) { return std::abs(-3.0 * p * p + 3.0 * p - 0.5); };
  double reaction_bound = std::max({slope(-0.5), slope(1.5), slope(0.5)});

  double rate = diffusion + reaction_bound / (params.relax * params.xi * params.xi) +
                params.b * params.beta * params.coupling_lipschitz / (params.relax * params.xi);
  return safety / rate;
}

void prime_derivatives(SolverState& state, const ModelParams& params, const BoundaryData& bdata,
                       const SourceTerms* sources) {
  const Mesh& mesh = state.u.mesh();
  if (state.udot.size() != mesh.n_cells()) state.udot = MeshFunction(mesh);
  if (state.pdot.size() != mesh.n_cells()) state.pdot = MeshFunction(mesh);
  semi_discrete_rhs(params, bdata, sources, state.t, state.u, state.p, state.udot, state.pdot);
  state.derivatives_cached = true;
}

SolverState advance(const SolverState& state, double dt, Integrator method,
                    const ModelParams& params, const BoundaryData& bdata,
                    const SourceTerms* sources) {
  if (!(dt > 0.0)) throw InputError("time step must be positive");
  const Mesh& mesh = state.u.mesh();
  const int n = mesh.n_cells();

  SolverState next;
  next.t = state.t + dt;
  next.u = MeshFunction(mesh);
  next.p = MeshFunction(mesh);
  next.udot = MeshFunction(mesh);
  next.pdot = MeshFunction(mesh);

  MeshFunction stage_k1u, stage_k1p;
  const double* k1u;
  const double* k1p;
  if (state.derivatives_cached) {
    k1u = state.udot.data();
    k1p = state.pdot.data();
  } else {
    stage_k1u = MeshFunction(mesh);
    stage_k1p = MeshFunction(mesh);
    rhs_raw(mesh, params, bdata, sources, state.t, state.u.data(), state.p.data(),
            stage_k1u.data(), stage_k1p.data());
    k1u = stage_k1u.data();
    k1p = stage_k1p.data();
  }

  const double* u0 = state.u.data();
  const double* p0 = state.p.data();
  double* un = next.u.data();
  double* pn = next.p.data();

  if (method == Integrator::ExplicitEuler) {
    for (int c = 0; c < n; ++c) {
      un[c] = u0[c] + dt * k1u[c];
      pn[c] = p0[c] + dt * k1p[c];
    }
  } else {
    // stage scratch persists across steps: RK4 dominates the run time and
    // must not reallocate multi-megabyte arrays every step
    static thread_local std::vector<double> su, sp, k2u, k2p, k3u, k3p, k4u, k4p;
    for (auto* v : {&su, &sp, &k2u, &k2p, &k3u, &k3p, &k4u, &k4p}) v->resize(n);

    for (int c = 0; c < n; ++c) {
      su[c] = u0[c] + 0.5 * dt * k1u[c];
      sp[c] = p0[c] + 0.5 * dt * k1p[c];
    }
    rhs_raw(mesh, params, bdata, sources, state.t + 0.5 * dt, su.data(), sp.data(), k2u.data(),
            k2p.data());
    for (int c = 0; c < n; ++c) {
      su[c] = u0[c] + 0.5 * dt * k2u[c];
      sp[c] = p0[c] + 0.5 * dt * k2p[c];
    }
    rhs_raw(mesh, params, bdata, sources, state.t + 0.5 * dt, su.data(), sp.data(), k3u.data(),
            k3p.data());
    for (int c = 0; c < n; ++c) {
      su[c] = u0[c] + dt * k3u[c];
      sp[c] = p0[c] + dt * k3p[c];
    }
    rhs_raw(mesh, params, bdata, sources, state.t + dt, su.data(), sp.data(), k4u.data(),
            k4p.data());
    const double w = dt / 6.0;
    for (int c = 0; c < n; ++c) {
      un[c] = u0[c] + w * (k1u[c] + 2.0 * k2u[c] + 2.0 * k3u[c] + k4u[c]);
      pn[c] = p0[c] + w * (k1p[c] + 2.0 * k2p[c] + 2.0 * k3p[c] + k4p[c]);
    }
  }

  for (int c = 0; c < n; ++c)
    if (!std::isfinite(un[c]) || !std::isfinite(pn[c]))
      throw BlowupError("state became non-finite", c, next.t);

  rhs_raw(mesh, params, bdata, sources, next.t, un, pn, next.udot.data(), next.pdot.data());
  next.derivatives_cached = true;
  return next;
}

}  // namespace pfvm
