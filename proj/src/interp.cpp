#include "pfvm/interp.hpp"

#include <algorithm>
#include <cmath>

#include "pfvm/errors.hpp"

namespace pfvm {

DualMesh::DualMesh(const Mesh& mesh) : mesh_(&mesh) {
  cells_.reserve(mesh.n_faces());
  for (int f = 0; f < mesh.n_faces(); ++f) {
    const Face& face = mesh.faces[f];
    DualCell dc;
    dc.face = f;
    dc.cell_k = face.owner;
    dc.cell_l = face.neighbor;
    dc.d_k = face.d_owner;
    dc.d_l = face.boundary() ? 0.0 : face.d_neighbor;
    dc.volume = face.area * (dc.d_k + dc.d_l) / 3.0;
    cells_.push_back(dc);
  }
}

double DualMesh::total_volume() const {
  double v = 0.0;
  for (const DualCell& dc : cells_) v += dc.volume;
  return v;
}

MeshFunction::MeshFunction(const Mesh& mesh, std::vector<double> values)
    : mesh_(&mesh), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != mesh.n_cells())
    throw InputError("mesh function length does not match the cell count");
}

MeshFunction project(const Mesh& mesh, const std::function<double(const Vec3&)>& f) {
  MeshFunction w(mesh);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    double v = f(mesh.cells[c].point);
    if (!std::isfinite(v))
      throw InputError("field is not finite at the significant point of cell " + std::to_string(c));
    w[c] = v;
  }
  return w;
}

namespace {

void require_same_mesh(const MeshFunction& v, const MeshFunction& w) {
  if (&v.mesh() != &w.mesh()) throw InputError("mesh functions live on different meshes");
}

}  // namespace

double inner_product(const MeshFunction& v, const MeshFunction& w) {
  require_same_mesh(v, w);
  const Mesh& mesh = v.mesh();
  double s = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) s += mesh.cells[c].volume * v[c] * w[c];
  return s;
}

double discrete_norm(const MeshFunction& w) { return std::sqrt(inner_product(w, w)); }

double h1_seminorm_sq(const MeshFunction& w) {
  const Mesh& mesh = w.mesh();
  double s = 0.0;
  for (const Face& f : mesh.faces) {
    if (f.boundary()) {
      s += f.tau * w[f.owner] * w[f.owner];
    } else {
      double d = w[f.owner] - w[f.neighbor];
      s += f.tau * d * d;
    }
  }
  return s;
}

DiscreteProducts discrete_products(const MeshFunction& v, const MeshFunction& w) {
  DiscreteProducts p;
  p.inner = inner_product(v, w);
  p.norm = std::sqrt(inner_product(w, w));
  p.seminorm_sq = h1_seminorm_sq(w);
  return p;
}

namespace {

// Pyramid membership over a cell's face, used to pick the dual cell that owns
// a point. s is the fractional plane distance from the apex.
bool in_face_pyramid(const Mesh& mesh, int cell, int f, const Vec3& x, double eps) {
  const Face& face = mesh.faces[f];
  const Vec3& apex = mesh.cells[cell].point;
  Vec3 n = mesh.outward_normal(f, cell);
  double depth = std::abs(dot(face.centroid - apex, n));
  if (depth <= 0.0) return false;
  double s = dot(x - apex, n) / depth;
  if (s < -eps || s > 1.0 + eps) return false;
  if (s < eps) return true;  // at the apex every surrounding pyramid matches; caller breaks ties
  Vec3 on_base = apex + (x - apex) / s;
  // point-in-convex-polygon against the face loop
  std::span<const int> loop = mesh.face_vertices(f);
  const size_t nv = loop.size();
  double scale = std::sqrt(face.area);
  for (size_t i = 0; i < nv; ++i) {
    const Vec3& a = mesh.vertices[loop[i]];
    const Vec3& b = mesh.vertices[loop[(i + 1) % nv]];
    double side = dot(cross(b - a, on_base - a), face.normal);
    if (side < -eps * scale * scale) return false;
  }
  return true;
}

}  // namespace

InterpolantValues eval_interpolants(const DualMesh& dual, const MeshFunction& w, const Vec3& x) {
  const Mesh& mesh = dual.mesh();
  if (&w.mesh() != &mesh) throw InputError("mesh function does not live on the dual's primal mesh");
  InterpolantValues out;
  out.cell = mesh.locate_cell(x);
  if (out.cell < 0) throw InputError("point lies outside the domain");
  out.piecewise_constant = w[out.cell];

  const double eps = 1e-12;
  for (int f : mesh.cell_faces(out.cell)) {  // ascending face index; first hit wins ties
    if (in_face_pyramid(mesh, out.cell, f, x, eps)) {
      out.dual_cell = f;
      break;
    }
  }
  if (out.dual_cell < 0) out.dual_cell = mesh.cell_faces(out.cell).front();

  const Face& face = mesh.faces[out.dual_cell];
  if (face.boundary()) {
    const Vec3& xk = mesh.cells[face.owner].point;
    Vec3 axis = face.foot - xk;
    out.axial_linear = w[face.owner] * (1.0 - dot(x - xk, axis) / norm_sq(axis));
  } else {
    const Vec3& xk = mesh.cells[face.owner].point;
    const Vec3& xl = mesh.cells[face.neighbor].point;
    Vec3 axis = xl - xk;
    double t = dot(x - xk, axis) / norm_sq(axis);
    out.axial_linear = w[face.owner] + t * (w[face.neighbor] - w[face.owner]);
  }
  return out;
}

double grad_interpolant_l2_sq(const DualMesh& dual, const MeshFunction& w) {
  const Mesh& mesh = dual.mesh();
  double s = 0.0;
  for (const DualCell& dc : dual.cells()) {
    double jump = dc.cell_l >= 0 ? w[dc.cell_l] - w[dc.cell_k] : -w[dc.cell_k];
    double d = mesh.faces[dc.face].d_sigma;
    if (d <= 0.0) continue;
    double grad = jump / d;
    s += dc.volume * grad * grad;
  }
  return s;
}

QuadraticForm2 constant_l2_form(const DualCell& dc, double area) {
  return {area * dc.d_k / 3.0, 0.0, area * dc.d_l / 3.0};
}

QuadraticForm2 linear_l2_form(const DualCell& dc, double area) {
  if (dc.cell_l < 0) {
    // single pyramid, interpolant decays linearly from w_K at the apex to 0
    // at the base: integral = area * d * w_K^2 / 30 under the quadratic
    // cross-section law.
    return {area * dc.d_k / 30.0, 0.0, 0.0};
  }
  const double dk = dc.d_k, dl = dc.d_l;
  const double D = dk + dl;
  const double cubes = dk * dk * dk + dl * dl * dl;
  QuadraticForm2 q;
  q.a = area * (dk / 3.0 - dk * dk / (2.0 * D) + cubes / (5.0 * D * D));
  q.c = area * (dl / 3.0 - dl * dl / (2.0 * D) + cubes / (5.0 * D * D));
  q.b = 0.5 * area * ((dk * dk + dl * dl) / (2.0 * D) - 2.0 * cubes / (5.0 * D * D));
  return q;
}

DualCellL2 dual_cell_l2(const MeshFunction& w, const DualMesh& dual, int dual_index) {
  const DualCell& dc = dual.cells()[dual_index];
  double area = dual.mesh().faces[dc.face].area;
  double wk = w[dc.cell_k];
  double wl = dc.cell_l >= 0 ? w[dc.cell_l] : 0.0;
  DualCellL2 out;
  out.constant_sq = constant_l2_form(dc, area).eval(wk, wl);
  out.linear_sq = linear_l2_form(dc, area).eval(wk, wl);
  return out;
}

double interpolant_l2_sq_linear(const DualMesh& dual, const MeshFunction& w) {
  double s = 0.0;
  for (size_t i = 0; i < dual.cells().size(); ++i)
    s += dual_cell_l2(w, dual, static_cast<int>(i)).linear_sq;
  return s;
}

double interpolant_l2_sq_constant_via_dual(const DualMesh& dual, const MeshFunction& w) {
  double s = 0.0;
  for (size_t i = 0; i < dual.cells().size(); ++i)
    s += dual_cell_l2(w, dual, static_cast<int>(i)).constant_sq;
  return s;
}

InterpolantNormBound interpolant_norm_bound(const Mesh& mesh) {
  DualMesh dual(mesh);
  double worst = 0.0;
  for (const DualCell& dc : dual.cells()) {
    double area = mesh.faces[dc.face].area;
    QuadraticForm2 q = linear_l2_form(dc, area);
    QuadraticForm2 s = constant_l2_form(dc, area);
    double ratio;
    if (dc.cell_l < 0) {
      ratio = s.a > 0.0 ? q.a / s.a : 0.0;
    } else {
      // largest generalized eigenvalue of (q, s) with s diagonal positive
      double p = s.a, r = s.c;
      if (p <= 0.0 || r <= 0.0) continue;
      double m11 = q.a / p;
      double m22 = q.c / r;
      double m12 = q.b / std::sqrt(p * r);
      double tr = m11 + m22;
      double det = m11 * m22 - m12 * m12;
      double disc = std::sqrt(std::max(tr * tr - 4.0 * det, 0.0));
      ratio = 0.5 * (tr + disc);
    }
    worst = std::max(worst, ratio);
  }
  return {worst, std::sqrt(worst)};
}

}  // namespace pfvm
