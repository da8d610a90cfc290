#pragma once

#include <functional>
#include <vector>

#include "pfvm/mesh.hpp"

namespace pfvm {

/// Dual cell erected over a face: a bipyramid with apexes at the two
/// significant points for interior faces, a single pyramid for boundary
/// faces. Indexed identically to the faces of the primal mesh.
struct DualCell {
  int face = -1;
  int cell_k = -1;     ///< owner-side apex
  int cell_l = -1;     ///< neighbor-side apex, -1 on the boundary
  double d_k = 0.0;
  double d_l = 0.0;
  double volume = 0.0; ///< area * (d_k + d_l) / 3
};

class DualMesh {
 public:
  explicit DualMesh(const Mesh& mesh);

  const Mesh& mesh() const { return *mesh_; }
  const std::vector<DualCell>& cells() const { return cells_; }
  const DualCell& over_face(int f) const { return cells_[f]; }
  double total_volume() const;

 private:
  const Mesh* mesh_;
  std::vector<DualCell> cells_;
};

inline DualMesh build_dual(const Mesh& mesh) { return DualMesh(mesh); }

/// One scalar value per cell; the discrete unknown container.
class MeshFunction {
 public:
  MeshFunction() = default;
  explicit MeshFunction(const Mesh& mesh, double fill = 0.0)
      : mesh_(&mesh), values_(mesh.n_cells(), fill) {}
  MeshFunction(const Mesh& mesh, std::vector<double> values);

  const Mesh& mesh() const { return *mesh_; }
  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int c) const { return values_[c]; }
  double& operator[](int c) { return values_[c]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

 private:
  const Mesh* mesh_ = nullptr;
  std::vector<double> values_;
};

/// Pointwise sampling at the significant points.
MeshFunction project(const Mesh& mesh, const std::function<double(const Vec3&)>& f);

struct DiscreteProducts {
  double inner = 0.0;        ///< (v,w) = sum m(K) v_K w_K
  double norm = 0.0;         ///< sqrt((w,w))
  double seminorm_sq = 0.0;  ///< discrete H1 seminorm squared of w
};

double inner_product(const MeshFunction& v, const MeshFunction& w);
double discrete_norm(const MeshFunction& w);
/// Face-difference quadratic form: interior tau*(w_K - w_L)^2 plus boundary
/// tau*w_K^2 (homogeneous Dirichlet built in).
double h1_seminorm_sq(const MeshFunction& w);
DiscreteProducts discrete_products(const MeshFunction& v, const MeshFunction& w);

struct InterpolantValues {
  double piecewise_constant = 0.0;  ///< cell value at x
  double axial_linear = 0.0;        ///< linear along the dual-cell axis, constant transversally
  int cell = -1;
  int dual_cell = -1;
};

/// Evaluates both interpolants at a point of the domain. Points on
/// dual-cell interfaces resolve to the lowest face index.
InterpolantValues eval_interpolants(const DualMesh& dual, const MeshFunction& w, const Vec3& x);

/// Exact gradient-norm integral of the axial-linear interpolant: the
/// gradient is constant per dual cell with magnitude |w_L - w_K| / d.
double grad_interpolant_l2_sq(const DualMesh& dual, const MeshFunction& w);

struct DualCellL2 {
  double constant_sq = 0.0;  ///< piecewise-constant interpolant, exact closed form
  double linear_sq = 0.0;    ///< axial-linear interpolant, exact integration
};

/// Quadratic form q(wk, wl) = a*wk^2 + 2b*wk*wl + c*wl^2.
struct QuadraticForm2 {
  double a = 0.0, b = 0.0, c = 0.0;
  double eval(double wk, double wl) const { return a * wk * wk + 2.0 * b * wk * wl + c * wl * wl; }
};

/// L2 form of the axial-linear interpolant over one dual cell, using the
/// quadratic (pyramidal) cross-section law.
QuadraticForm2 linear_l2_form(const DualCell& dc, double area);
/// L2 form of the piecewise-constant interpolant over one dual cell.
QuadraticForm2 constant_l2_form(const DualCell& dc, double area);

DualCellL2 dual_cell_l2(const MeshFunction& w, const DualMesh& dual, int dual_index);

/// Whole-domain L2 norms assembled from the per-dual-cell forms.
double interpolant_l2_sq_linear(const DualMesh& dual, const MeshFunction& w);
double interpolant_l2_sq_constant_via_dual(const DualMesh& dual, const MeshFunction& w);

struct InterpolantNormBound {
  double squared = 0.0;    ///< C with ||Q w||^2 <= C ||S w||^2
  double unsquared = 0.0;  ///< sqrt(C) for the unsquared inequality
};

/// Mesh-dependent constant bounding the axial-linear interpolant by the
/// piecewise-constant one in L2: the largest generalized eigenvalue of the
/// per-dual-cell form pairs.
InterpolantNormBound interpolant_norm_bound(const Mesh& mesh);

}  // namespace pfvm
