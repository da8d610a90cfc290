#include "pfvm/analysis.hpp"

#include <cmath>

#include "pfvm/errors.hpp"

namespace pfvm {

namespace {

double bump1(double s) {
  double t = 1.0 - s * s;
  return t > 0.0 ? std::exp(-1.0 / t) : 0.0;
}

double bump1_d1(double s) {
  double t = 1.0 - s * s;
  if (t <= 0.0) return 0.0;
  return bump1(s) * (-2.0 * s / (t * t));
}

double bump1_d2(double s) {
  double t = 1.0 - s * s;
  if (t <= 0.0) return 0.0;
  double t2 = t * t;
  return bump1(s) * (4.0 * s * s / (t2 * t2) - 2.0 * (1.0 + 3.0 * s * s) / (t2 * t));
}

}  // namespace

double BumpField::value(const Vec3& x) const {
  double v = amplitude;
  for (int a = 0; a < 3; ++a) v *= bump1((x[a] - center[a]) / halfwidth[a]);
  return v;
}

Vec3 BumpField::gradient(const Vec3& x) const {
  double phi[3], s[3];
  for (int a = 0; a < 3; ++a) {
    s[a] = (x[a] - center[a]) / halfwidth[a];
    phi[a] = bump1(s[a]);
  }
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    double others = amplitude;
    for (int o = 0; o < 3; ++o)
      if (o != a) others *= phi[o];
    g[a] = others * bump1_d1(s[a]) / halfwidth[a];
  }
  return g;
}

double BumpField::laplacian(const Vec3& x) const {
  double phi[3], s[3];
  for (int a = 0; a < 3; ++a) {
    s[a] = (x[a] - center[a]) / halfwidth[a];
    phi[a] = bump1(s[a]);
  }
  double lap = 0.0;
  for (int a = 0; a < 3; ++a) {
    double others = amplitude;
    for (int o = 0; o < 3; ++o)
      if (o != a) others *= phi[o];
    lap += others * bump1_d2(s[a]) / (halfwidth[a] * halfwidth[a]);
  }
  return lap;
}

double TimeBump::value(double t) const { return bump1((2.0 * t - t0 - t1) / (t1 - t0)); }

double TimeBump::derivative(double t) const {
  return bump1_d1((2.0 * t - t0 - t1) / (t1 - t0)) * 2.0 / (t1 - t0);
}

// ---------------------------------------------------------------------------
// Quadrature

namespace {

struct GaussRule {
  const double* x;
  const double* w;
  int n;
};

GaussRule gauss_rule(int n) {
  // nodes/weights on [-1, 1]
  static const double x2[] = {-0.5773502691896257, 0.5773502691896257};
  static const double w2[] = {1.0, 1.0};
  static const double x3[] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static const double w3[] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  static const double x4[] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                              0.8611363115940526};
  static const double w4[] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                              0.3478548451374538};
  static const double x5[] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                              0.5384693101056831, 0.9061798459386640};
  static const double w5[] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                              0.4786286704993665, 0.2369268850561891};
  switch (n) {
    case 2: return {x2, w2, 2};
    case 3: return {x3, w3, 3};
    case 4: return {x4, w4, 4};
    case 5: return {x5, w5, 5};
    default: throw InputError("unsupported Gauss-Legendre point count");
  }
}

// Degree-2 four-point tetrahedral rule (barycentric permutations).
template <typename F, typename R>
R tet_integral(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const F& f, R zero) {
  constexpr double alpha = 0.5854101966249685;
  constexpr double beta = 0.1381966011250105;
  double vol = std::abs(dot(b - a, cross(c - a, d - a))) / 6.0;
  if (vol <= 0.0) return zero;
  const Vec3* pts[4] = {&a, &b, &c, &d};
  R sum = zero;
  for (int i = 0; i < 4; ++i) {
    Vec3 x;
    for (int j = 0; j < 4; ++j) x += (j == i ? alpha : beta) * (*pts[j]);
    sum += f(x);
  }
  return (vol / 4.0) * sum;
}

template <typename F, typename R>
R cell_integral_generic(const Mesh& mesh, int cell, const F& f, int points_per_axis,
                        int subdivisions, R zero) {
  if (mesh.box) {
    const BoxStructure& box = *mesh.box;
    const int nx = box.dims[0], ny = box.dims[1];
    int i = cell % nx, j = (cell / nx) % ny, k = cell / (nx * ny);
    double lo[3] = {box.spacings[0][i], box.spacings[1][j], box.spacings[2][k]};
    double hi[3] = {box.spacings[0][i + 1], box.spacings[1][j + 1], box.spacings[2][k + 1]};
    GaussRule rule = gauss_rule(points_per_axis);
    const int s = std::max(subdivisions, 1);
    double step[3] = {(hi[0] - lo[0]) / s, (hi[1] - lo[1]) / s, (hi[2] - lo[2]) / s};
    R sum = zero;
    for (int sa = 0; sa < s; ++sa)
      for (int sb = 0; sb < s; ++sb)
        for (int sc = 0; sc < s; ++sc) {
          double base[3] = {lo[0] + sa * step[0], lo[1] + sb * step[1], lo[2] + sc * step[2]};
          for (int ia = 0; ia < rule.n; ++ia)
            for (int ib = 0; ib < rule.n; ++ib)
              for (int ic = 0; ic < rule.n; ++ic) {
                Vec3 x{base[0] + 0.5 * step[0] * (1.0 + rule.x[ia]),
                       base[1] + 0.5 * step[1] * (1.0 + rule.x[ib]),
                       base[2] + 0.5 * step[2] * (1.0 + rule.x[ic])};
                sum += (rule.w[ia] * rule.w[ib] * rule.w[ic]) * f(x);
              }
        }
    double jac = 0.125 * step[0] * step[1] * step[2];
    return jac * sum;
  }
  // Convex cell: fan of tetrahedra from the significant point over each
  // face's centroid fan.
  const Vec3& apex = mesh.cells[cell].point;
  R sum = zero;
  for (int fi : mesh.cell_faces(cell)) {
    const Face& face = mesh.faces[fi];
    std::span<const int> loop = mesh.face_vertices(fi);
    for (size_t e = 0; e < loop.size(); ++e) {
      const Vec3& a = mesh.vertices[loop[e]];
      const Vec3& b = mesh.vertices[loop[(e + 1) % loop.size()]];
      sum += tet_integral(apex, face.centroid, a, b, f, zero);
    }
  }
  return sum;
}

}  // namespace

double cell_integral(const Mesh& mesh, int cell, const std::function<double(const Vec3&)>& f,
                     int points_per_axis, int subdivisions) {
  return cell_integral_generic(mesh, cell, f, points_per_axis, subdivisions, 0.0);
}

Vec3 dual_cell_vector_integral(const DualMesh& dual, int dual_index,
                               const std::function<Vec3(const Vec3&)>& f) {
  const Mesh& mesh = dual.mesh();
  const DualCell& dc = dual.cells()[dual_index];
  const Face& face = mesh.faces[dc.face];
  std::span<const int> loop = mesh.face_vertices(dc.face);
  Vec3 sum;
  for (int side = 0; side < 2; ++side) {
    int cell = side == 0 ? dc.cell_k : dc.cell_l;
    if (cell < 0) continue;
    const Vec3& apex = mesh.cells[cell].point;
    for (size_t e = 0; e < loop.size(); ++e) {
      const Vec3& a = mesh.vertices[loop[e]];
      const Vec3& b = mesh.vertices[loop[(e + 1) % loop.size()]];
      sum += tet_integral(apex, face.centroid, a, b, f, Vec3{});
    }
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Estimate ledger

namespace {

double well_energy_sum(const MeshFunction& p) {
  const Mesh& mesh = p.mesh();
  double s = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) s += double_well(p[c]) * mesh.cells[c].volume;
  return s;
}

}  // namespace

LedgerRow energy_terms(const SolverState& state) {
  LedgerRow row;
  row.t = state.t;
  row.norm2_pdot = inner_product(state.pdot, state.pdot);
  row.norm2_udot = inner_product(state.udot, state.udot);
  row.semi2_p = h1_seminorm_sq(state.p);
  row.semi2_u = h1_seminorm_sq(state.u);
  row.well_energy = well_energy_sum(state.p);
  return row;
}

EstimateLedger::EstimateLedger(const ModelParams& params, const SolverState& initial)
    : params_(params) {
  const Mesh& mesh = initial.u.mesh();
  initial_semi2_p_ = h1_seminorm_sq(initial.p);
  initial_semi2_u_ = h1_seminorm_sq(initial.u);
  initial_well_ = well_energy_sum(initial.p);
  limiter_bound_ = params.limiter_bound();
  well_constant_ = double_well_constant();
  domain_volume_ = mesh.domain_volume;
}

double EstimateLedger::source_constant() const {
  double bb = params_.b * params_.beta;
  return bb * bb * limiter_bound_ * limiter_bound_ * domain_volume_ / (2.0 * params_.relax);
}

double EstimateLedger::lhs_at(const LedgerRow& row, EstimateConvention convention) const {
  const double xi2 = params_.xi * params_.xi;
  const double L2 = params_.latent_heat * params_.latent_heat;
  const double c_pdot = params_.relax * xi2 / 4.0;
  const double c_udot = convention == EstimateConvention::Printed
                            ? params_.relax * xi2 / (8.0 * L2)
                            : params_.relax * xi2 / (4.0 * L2);
  return c_pdot * row.int_pdot + c_udot * row.int_udot + 0.5 * xi2 * row.semi2_p +
         params_.relax * xi2 / (4.0 * L2) * row.semi2_u;
}

double EstimateLedger::rhs_at(double t) const {
  const double xi2 = params_.xi * params_.xi;
  const double L2 = params_.latent_heat * params_.latent_heat;
  double initial = 0.5 * xi2 * initial_semi2_p_ +
                   params_.relax * xi2 / (2.0 * L2) * initial_semi2_u_ + initial_well_;
  return initial * std::exp(t) + source_constant() * (std::exp(t) - 1.0) +
         well_constant_ * domain_volume_;
}

const LedgerRow& EstimateLedger::append(const SolverState& state) {
  if (!state.derivatives_cached)
    throw InputError("ledger rows need a state with cached derivatives");
  LedgerRow row = energy_terms(state);
  if (!rows_.empty()) {
    const LedgerRow& prev = rows_.back();
    double dt = row.t - prev.t;
    row.int_pdot = prev.int_pdot + 0.5 * (prev.norm2_pdot + row.norm2_pdot) * dt;
    row.int_udot = prev.int_udot + 0.5 * (prev.norm2_udot + row.norm2_udot) * dt;
  }
  row.lhs = lhs_at(row, EstimateConvention::Printed);
  row.rhs = rhs_at(row.t);
  row.margin = row.rhs - row.lhs;
  rows_.push_back(row);
  return rows_.back();
}

MarginReport apriori_bound_check(const EstimateLedger& ledger, const ModelParams& params, double T,
                                 EstimateConvention convention) {
  if (ledger.rows().empty()) throw InputError("empty ledger");
  const LedgerRow* at = &ledger.rows().back();
  for (const LedgerRow& row : ledger.rows())
    if (std::abs(row.t - T) < std::abs(at->t - T)) at = &row;

  // Coefficients come from the passed parameters; the ledger only supplies
  // the raw norm columns and the initial-data constants.
  const double xi2 = params.xi * params.xi;
  const double L2 = params.latent_heat * params.latent_heat;
  const double c_udot = convention == EstimateConvention::Printed
                            ? params.relax * xi2 / (8.0 * L2)
                            : params.relax * xi2 / (4.0 * L2);
  MarginReport report;
  report.lhs = params.relax * xi2 / 4.0 * at->int_pdot + c_udot * at->int_udot +
               0.5 * xi2 * at->semi2_p + params.relax * xi2 / (4.0 * L2) * at->semi2_u;
  double bb = params.b * params.beta;
  double source = bb * bb * params.limiter_bound() * params.limiter_bound() *
                  ledger.domain_volume() / (2.0 * params.relax);
  double initial = 0.5 * xi2 * ledger.initial_semi2_p() +
                   params.relax * xi2 / (2.0 * L2) * ledger.initial_semi2_u() +
                   ledger.initial_well();
  report.rhs = initial * std::exp(at->t) + source * (std::exp(at->t) - 1.0) +
               ledger.well_constant() * ledger.domain_volume();
  report.margin = report.rhs - report.lhs;
  report.ok = report.margin >= 0.0;
  return report;
}

StepEnergyReport step_energy_check(const EstimateLedger& ledger, double dt_step, double T) {
  StepEnergyReport report;
  const ModelParams& params = ledger.params();
  const double xi2 = params.xi * params.xi;
  const double L2 = params.latent_heat * params.latent_heat;
  auto energy = [&](const LedgerRow& row) {
    return 0.5 * xi2 * row.semi2_p + params.relax * xi2 / (4.0 * L2) * row.semi2_u +
           row.well_energy;
  };
  const double source = ledger.source_constant();
  if (ledger.rows().empty()) return report;
  const double scale = 1.0 + energy(ledger.rows().front()) + source * T;
  for (size_t i = 1; i < ledger.rows().size(); ++i) {
    const LedgerRow& prev = ledger.rows()[i - 1];
    const LedgerRow& cur = ledger.rows()[i];
    double dt = cur.t - prev.t;
    double budget = 0.1 * scale * dt_step * dt;
    double excess = (energy(cur) - energy(prev)) - source * dt - budget;
    if (excess > report.worst_excess) {
      report.worst_excess = excess;
      report.worst_interval = static_cast<int>(i);
      report.ok = false;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Flux consistency

FluxConsistency flux_consistency(const MeshFunction& p, const BumpField& q, int points_per_axis,
                                 int subdivisions) {
  const Mesh& mesh = p.mesh();

  Vec3 lo = mesh.vertices.front(), hi = mesh.vertices.front();
  for (const Vec3& v : mesh.vertices)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], v[a]);
      hi[a] = std::max(hi[a], v[a]);
    }
  for (int a = 0; a < 3; ++a)
    if (q.center[a] - q.halfwidth[a] <= lo[a] || q.center[a] + q.halfwidth[a] >= hi[a])
      throw InputError("test field support touches the domain boundary");

  FluxConsistency out;
  static thread_local std::vector<double> flux;
  cell_flux_all(p, BoundaryValues{}, flux);
  for (int c = 0; c < mesh.n_cells(); ++c) out.discrete += q.value(mesh.cells[c].point) * flux[c];

  auto lap = [&](const Vec3& x) { return q.laplacian(x); };
  for (int c = 0; c < mesh.n_cells(); ++c) {
    // skip cells whose bounding box misses the support
    bool outside = false;
    std::vector<int> ids = mesh.cell_vertices(c);
    for (int a = 0; a < 3 && !outside; ++a) {
      double clo = 1e300, chi = -1e300;
      for (int id : ids) {
        clo = std::min(clo, mesh.vertices[id][a]);
        chi = std::max(chi, mesh.vertices[id][a]);
      }
      if (chi <= q.center[a] - q.halfwidth[a] || clo >= q.center[a] + q.halfwidth[a])
        outside = true;
    }
    if (outside) continue;
    out.integrated += -p[c] * cell_integral(mesh, c, lap, points_per_axis, subdivisions);
  }
  out.residual = std::abs(out.discrete - out.integrated);
  return out;
}

// ---------------------------------------------------------------------------
// Weak residuals

WeakResiduals weak_residual(const Trajectory& traj, const ModelParams& params,
                            const SourceTerms* sources, const BumpField& v_heat,
                            const BumpField& q_phase, const TimeBump& psi, const TimeBump& phi) {
  if (!traj.mesh || traj.times.size() < 2) throw InputError("trajectory needs at least two snapshots");
  const Mesh& mesh = *traj.mesh;
  DualMesh dual(mesh);
  const int nc = mesh.n_cells();
  const int nf = mesh.n_faces();

  // Per-cell integrals of the space test functions and per-dual-cell
  // integrals of their gradients, computed once.
  std::vector<double> cell_v(nc), cell_q(nc);
  for (int c = 0; c < nc; ++c) {
    cell_v[c] = cell_integral(mesh, c, [&](const Vec3& x) { return v_heat.value(x); });
    cell_q[c] = cell_integral(mesh, c, [&](const Vec3& x) { return q_phase.value(x); });
  }
  std::vector<Vec3> dual_v(nf), dual_q(nf);
  for (int f = 0; f < nf; ++f) {
    dual_v[f] = dual_cell_vector_integral(dual, f, [&](const Vec3& x) { return v_heat.gradient(x); });
    dual_q[f] = dual_cell_vector_integral(dual, f, [&](const Vec3& x) { return q_phase.gradient(x); });
  }

  // The axial-linear gradient is the projection of the field gradient onto
  // the face normal, so the plain pairing with a smooth gradient undershoots
  // by the same factor 3 that appears in the seminorm identity; the factor
  // restores the full Dirichlet pairing.
  auto grad_pairing = [&](const std::vector<double>& w, const std::vector<Vec3>& g) {
    double s = 0.0;
    for (int f = 0; f < nf; ++f) {
      const Face& face = mesh.faces[f];
      const DualCell& dc = dual.cells()[f];
      Vec3 axis;
      double jump;
      if (dc.cell_l >= 0) {
        axis = mesh.cells[dc.cell_l].point - mesh.cells[dc.cell_k].point;
        jump = w[dc.cell_l] - w[dc.cell_k];
      } else {
        axis = face.foot - mesh.cells[dc.cell_k].point;
        jump = -w[dc.cell_k];
      }
      double len2 = norm_sq(axis);
      if (len2 <= 0.0) continue;
      s += dot((jump / len2) * axis, g[f]);
    }
    return 3.0 * s;
  };

  const double xi2 = params.xi * params.xi;
  const double sign = params.coupling_sign;
  const double bbx = params.b * params.beta * params.xi;

  double heat = 0.0, phase = 0.0;
  double prev_heat = 0.0, prev_phase = 0.0;
  for (size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    const std::vector<double>& u = traj.u[i];
    const std::vector<double>& p = traj.p[i];

    double mass_uv = 0.0, mass_pv = 0.0, mass_pq = 0.0, mass_f0q = 0.0, mass_lamq = 0.0;
    double mass_srcu = 0.0, mass_srcp = 0.0;
    for (int c = 0; c < nc; ++c) {
      mass_uv += u[c] * cell_v[c];
      mass_pv += p[c] * cell_v[c];
      mass_pq += p[c] * cell_q[c];
      mass_f0q += reaction_cubic(p[c]) * cell_q[c];
      mass_lamq += limiter(params.g(u[c], p[c]), params.knots) * cell_q[c];
      if (sources) {
        const Vec3& x = mesh.cells[c].point;
        if (sources->u) mass_srcu += sources->u(x, t) * cell_v[c];
        if (sources->p) mass_srcp += sources->p(x, t) * cell_q[c];
      }
    }
    double grad_uv = grad_pairing(u, dual_v);
    double grad_pq = grad_pairing(p, dual_q);

    double heat_t = -(mass_uv - params.latent_heat * mass_pv) * psi.derivative(t) +
                    grad_uv * psi.value(t) - mass_srcu * psi.value(t);
    double phase_t = -params.relax * xi2 * mass_pq * phi.derivative(t) +
                     xi2 * grad_pq * phi.value(t) - mass_f0q * phi.value(t) -
                     sign * bbx * mass_lamq * phi.value(t) - xi2 * mass_srcp * phi.value(t);

    if (i > 0) {
      double dt = t - traj.times[i - 1];
      heat += 0.5 * (prev_heat + heat_t) * dt;
      phase += 0.5 * (prev_phase + phase_t) * dt;
    }
    prev_heat = heat_t;
    prev_phase = phase_t;
  }
  return {std::abs(heat), std::abs(phase)};
}

}  // namespace pfvm
