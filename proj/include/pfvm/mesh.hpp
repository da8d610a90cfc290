#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pfvm/vec3.hpp"

namespace pfvm {

/// Planar polygonal face of the mesh together with the metrics the
/// two-point flux and the dual-mesh construction consume.
struct Face {
  int owner = -1;
  int neighbor = -1;  ///< -1 marks a boundary face.
  double area = 0.0;
  Vec3 normal;    ///< unit normal, oriented owner -> neighbor (outward on the boundary)
  Vec3 centroid;
  double d_owner = 0.0;     ///< distance from the owner's significant point to the face plane
  double d_neighbor = 0.0;  ///< same for the neighbor, 0 on the boundary
  double d_sigma = 0.0;     ///< point-to-point distance (interior), owner distance (boundary)
  double tau = 0.0;         ///< transmissibility area / d_sigma
  Vec3 foot;                ///< foot point of the orthogonal segment on the face

  bool boundary() const { return neighbor < 0; }
};

struct Cell {
  Vec3 point;          ///< significant point carrying the unknown
  double volume = 0.0;
};

/// Rectilinear structure kept for generated box meshes; enables O(log n)
/// point location, exact nested refinement and cheap cell circumradii.
struct BoxStructure {
  std::array<double, 3> extents{};
  std::array<std::vector<double>, 3> spacings;  // grid planes per axis, 0 .. extent
  std::array<int, 3> dims{};                    // cell counts per axis

  int cell_index(int i, int j, int k) const { return (k * dims[1] + j) * dims[0] + i; }
};

/// Compact flux tables: the residual sweep touches millions of faces per
/// step and must not drag full Face records through the cache.
struct InteriorFlux {
  int owner;
  int neighbor;
  double tau;
};

struct BoundaryFlux {
  int owner;
  double tau;
  Vec3 foot;
};

class Mesh {
 public:
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Cell> cells;
  double domain_volume = 0.0;
  std::optional<BoxStructure> box;

  const std::vector<InteriorFlux>& interior_flux() const { return interior_flux_; }
  const std::vector<BoundaryFlux>& boundary_flux() const { return boundary_flux_; }
  const std::vector<double>& inverse_volumes() const { return inverse_volumes_; }
  /// Per-axis reciprocal center-to-center distances (walls use the half
  /// width); only set for box meshes, feeding the structured flux sweep.
  const std::array<std::vector<double>, 3>& box_inverse_distances() const {
    return box_inverse_distances_;
  }
  const std::array<std::vector<double>, 3>& box_widths() const { return box_widths_; }

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }

  std::span<const int> face_vertices(int f) const {
    return {face_vertex_ids_.data() + face_vertex_offsets_[f],
            face_vertex_ids_.data() + face_vertex_offsets_[f + 1]};
  }
  /// Faces of a cell, ascending global face index.
  std::span<const int> cell_faces(int c) const {
    return {cell_face_ids_.data() + cell_face_offsets_[c],
            cell_face_ids_.data() + cell_face_offsets_[c + 1]};
  }

  /// Outward unit normal of face f as seen from cell c.
  Vec3 outward_normal(int f, int c) const {
    const Face& face = faces[f];
    return face.owner == c ? face.normal : -1.0 * face.normal;
  }

  /// Deduplicated vertex ids of a cell.
  std::vector<int> cell_vertices(int c) const;

  /// Containing cell of a point, -1 if outside the domain. Points on cell
  /// interfaces resolve to the lowest cell index.
  int locate_cell(const Vec3& x) const;

  int interior_face_count() const;

  // Builder interface: fill vertices / cells / face loops, then finalize.
  void set_face_loops(std::vector<int> offsets, std::vector<int> ids) {
    face_vertex_offsets_ = std::move(offsets);
    face_vertex_ids_ = std::move(ids);
  }
  /// Computes face geometry, per-side distances, transmissibilities, cell
  /// volumes, the cell->face table and the domain volume.
  void finalize();

 private:
  std::vector<int> face_vertex_offsets_;
  std::vector<int> face_vertex_ids_;
  std::vector<int> cell_face_offsets_;
  std::vector<int> cell_face_ids_;
  std::vector<InteriorFlux> interior_flux_;
  std::vector<BoundaryFlux> boundary_flux_;
  std::vector<double> inverse_volumes_;
  std::array<std::vector<double>, 3> box_inverse_distances_;
  std::array<std::vector<double>, 3> box_widths_;
};

/// Rectilinear mesh over [0,extents] with the given grid planes per axis;
/// significant points are cell centers, so interior segments are orthogonal
/// to the faces by construction.
Mesh generate_box_mesh(const std::array<double, 3>& extents,
                       const std::array<std::vector<double>, 3>& spacings);

/// Uniform-subdivision convenience front end for generate_box_mesh.
Mesh uniform_box_mesh(const std::array<double, 3>& extents, const std::array<int, 3>& cells);

/// Nested refinement of a generated box mesh (inserts the midpoint of every
/// spacing interval; each cell splits into 8).
Mesh refine_box_mesh(const Mesh& mesh);

struct Violation {
  int entity_a = -1;
  int entity_b = -1;
  double magnitude = 0.0;
  std::string what;
};

struct ConditionReport {
  bool pass = true;
  double worst = 0.0;
  std::vector<Violation> violations;
};

struct AdmissibilityReport {
  std::array<ConditionReport, 5> conditions;  // partition, closure, intersections, points, orthogonality
  std::vector<int> boundary_incident_points;  // informational: cells whose point touches their boundary
  double tolerance = 0.0;
  double angle_tolerance = 0.0;

  bool pass() const {
    for (const auto& c : conditions)
      if (!c.pass) return false;
    return true;
  }
};

/// Evaluates the five admissibility conditions. Violations are reported,
/// never thrown.
AdmissibilityReport validate_admissibility(const Mesh& mesh, double rel_tol = 1e-9,
                                           double angle_tol = 1e-9);

struct MeshMetrics {
  double pyramid_residual = 0.0;  ///< sum of area*d_sigma over faces minus 3*volume
  double mesh_norm = 0.0;         ///< max cell circumradius (smallest enclosing ball)
  double tau_min = 0.0;
  double tau_max = 0.0;
  double volume_min = 0.0;
  double volume_max = 0.0;
  double cell_volume_sum = 0.0;
  double domain_volume = 0.0;
  int cells = 0;
  int faces = 0;
  int interior_faces = 0;
  int boundary_faces = 0;
};

MeshMetrics mesh_metrics(const Mesh& mesh);

/// Exact smallest enclosing ball radius of a point set (Welzl).
double enclosing_ball_radius(const std::vector<Vec3>& points);

// PFVM-MESH v1 text format.
Mesh load_mesh(const std::string& path, double planarity_tol = 1e-8);
void save_mesh(const Mesh& mesh, const std::string& path);

}  // namespace pfvm
