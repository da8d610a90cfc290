#include "pfvm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "pfvm/errors.hpp"

namespace pfvm {

namespace {

struct FaceGeometry {
  double area = 0.0;
  Vec3 normal;
  Vec3 centroid;
  double planarity = 0.0;  // max vertex distance to the face plane
  double diameter = 0.0;
};

FaceGeometry face_geometry(const std::vector<Vec3>& vertices, std::span<const int> loop) {
  FaceGeometry g;
  const int n = static_cast<int>(loop.size());
  Vec3 mean;
  for (int id : loop) mean += vertices[id];
  mean *= 1.0 / n;

  // Fan around the vertex mean: exact for planar polygons, robust otherwise.
  Vec3 area_vec;
  Vec3 weighted_centroid;
  for (int i = 0; i < n; ++i) {
    const Vec3& a = vertices[loop[i]];
    const Vec3& b = vertices[loop[(i + 1) % n]];
    Vec3 tri = 0.5 * cross(a - mean, b - mean);
    area_vec += tri;
    double tri_area = norm(tri);
    weighted_centroid += tri_area * ((mean + a + b) / 3.0);
  }
  g.area = norm(area_vec);
  g.normal = g.area > 0.0 ? area_vec / g.area : Vec3{};
  g.centroid = g.area > 0.0 ? weighted_centroid / g.area : mean;
  for (int id : loop) g.planarity = std::max(g.planarity, std::abs(dot(vertices[id] - g.centroid, g.normal)));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      g.diameter = std::max(g.diameter, distance(vertices[loop[i]], vertices[loop[j]]));
  return g;
}

}  // namespace

void Mesh::finalize() {
  const int nf = n_faces();
  const int nc = n_cells();

  // cell -> face table, faces in ascending index order per cell
  cell_face_offsets_.assign(nc + 1, 0);
  for (const Face& f : faces) {
    ++cell_face_offsets_[f.owner + 1];
    if (f.neighbor >= 0) ++cell_face_offsets_[f.neighbor + 1];
  }
  std::partial_sum(cell_face_offsets_.begin(), cell_face_offsets_.end(), cell_face_offsets_.begin());
  cell_face_ids_.assign(cell_face_offsets_.back(), -1);
  std::vector<int> fill(nc, 0);
  for (int f = 0; f < nf; ++f) {
    const Face& face = faces[f];
    cell_face_ids_[cell_face_offsets_[face.owner] + fill[face.owner]++] = f;
    if (face.neighbor >= 0)
      cell_face_ids_[cell_face_offsets_[face.neighbor] + fill[face.neighbor]++] = f;
  }

  for (int f = 0; f < nf; ++f) {
    Face& face = faces[f];
    FaceGeometry g = face_geometry(vertices, face_vertices(f));
    face.area = g.area;
    face.normal = g.normal;
    face.centroid = g.centroid;

    const Vec3& xk = cells[face.owner].point;
    face.d_owner = std::abs(dot(face.centroid - xk, face.normal));
    if (face.neighbor >= 0) {
      const Vec3& xl = cells[face.neighbor].point;
      face.d_neighbor = std::abs(dot(face.centroid - xl, face.normal));
      face.d_sigma = distance(xk, xl);
      Vec3 dir = xl - xk;
      double along = dot(dir, face.normal);
      if (std::abs(along) > 1e-300) {
        double t = dot(face.centroid - xk, face.normal) / along;
        face.foot = xk + t * dir;
      } else {
        face.foot = face.centroid;  // degenerate; flagged by the validator
      }
    } else {
      face.d_neighbor = 0.0;
      face.d_sigma = face.d_owner;
      face.foot = xk + dot(face.centroid - xk, face.normal) * face.normal;
    }
    face.tau = face.d_sigma > 0.0 ? face.area / face.d_sigma : 0.0;
  }

  // Divergence-theorem volumes; exact for planar faces.
  for (int c = 0; c < nc; ++c) {
    double v = 0.0;
    for (int f : cell_faces(c)) {
      const Face& face = faces[f];
      v += face.area * dot(face.centroid, outward_normal(f, c));
    }
    cells[c].volume = v / 3.0;
  }

  if (box) {
    domain_volume = box->extents[0] * box->extents[1] * box->extents[2];
  } else {
    double v = 0.0;
    for (const Face& face : faces)
      if (face.boundary()) v += face.area * dot(face.centroid, face.normal);
    domain_volume = v / 3.0;
  }

  interior_flux_.clear();
  boundary_flux_.clear();
  for (const Face& face : faces) {
    if (face.boundary())
      boundary_flux_.push_back({face.owner, face.tau, face.foot});
    else
      interior_flux_.push_back({face.owner, face.neighbor, face.tau});
  }

  inverse_volumes_.resize(nc);
  for (int c = 0; c < nc; ++c) inverse_volumes_[c] = 1.0 / cells[c].volume;

  if (box) {
    for (int a = 0; a < 3; ++a) {
      const std::vector<double>& s = box->spacings[a];
      const int n = box->dims[a];
      std::vector<double>& width = box_widths_[a];
      std::vector<double>& invd = box_inverse_distances_[a];
      width.resize(n);
      invd.resize(n + 1);
      for (int i = 0; i < n; ++i) width[i] = s[i + 1] - s[i];
      invd[0] = 2.0 / width[0];
      for (int i = 1; i < n; ++i) invd[i] = 2.0 / (width[i - 1] + width[i]);
      invd[n] = 2.0 / width[n - 1];
    }
  }
}

std::vector<int> Mesh::cell_vertices(int c) const {
  std::vector<int> ids;
  for (int f : cell_faces(c))
    for (int id : face_vertices(f)) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

int Mesh::interior_face_count() const {
  int n = 0;
  for (const Face& f : faces)
    if (!f.boundary()) ++n;
  return n;
}

int Mesh::locate_cell(const Vec3& x) const {
  if (box) {
    const BoxStructure& b = *box;
    std::array<int, 3> idx{};
    for (int a = 0; a < 3; ++a) {
      const std::vector<double>& s = b.spacings[a];
      double eps = 1e-12 * std::max(1.0, b.extents[a]);
      if (x[a] < s.front() - eps || x[a] > s.back() + eps) return -1;
      auto it = std::upper_bound(s.begin(), s.end(), x[a]);
      int i = static_cast<int>(it - s.begin()) - 1;
      idx[a] = std::clamp(i, 0, b.dims[a] - 1);
    }
    return b.cell_index(idx[0], idx[1], idx[2]);
  }
  for (int c = 0; c < n_cells(); ++c) {
    bool inside = true;
    double scale = std::cbrt(std::max(cells[c].volume, 0.0));
    for (int f : cell_faces(c)) {
      if (dot(x - faces[f].centroid, outward_normal(f, c)) > 1e-12 * std::max(1.0, scale)) {
        inside = false;
        break;
      }
    }
    if (inside) return c;
  }
  return -1;
}

// ---------------------------------------------------------------------------
// Generators

Mesh generate_box_mesh(const std::array<double, 3>& extents,
                       const std::array<std::vector<double>, 3>& spacings) {
  for (int a = 0; a < 3; ++a) {
    if (extents[a] <= 0.0) throw InputError("box extent must be positive");
    const std::vector<double>& s = spacings[a];
    if (s.size() < 2) throw InputError("spacing list needs at least two entries");
    for (size_t i = 1; i < s.size(); ++i)
      if (!(s[i] > s[i - 1])) throw InputError("spacing list must be strictly increasing");
    double tol = 1e-12 * extents[a];
    if (std::abs(s.front()) > tol || std::abs(s.back() - extents[a]) > tol)
      throw InputError("spacing list must cover [0, extent]");
  }

  Mesh mesh;
  BoxStructure box;
  box.extents = extents;
  box.spacings = spacings;
  const int nx = static_cast<int>(spacings[0].size()) - 1;
  const int ny = static_cast<int>(spacings[1].size()) - 1;
  const int nz = static_cast<int>(spacings[2].size()) - 1;
  box.dims = {nx, ny, nz};

  auto vid = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
  mesh.vertices.reserve((nx + 1) * (ny + 1) * (nz + 1));
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        mesh.vertices.push_back({spacings[0][i], spacings[1][j], spacings[2][k]});

  mesh.cells.resize(nx * ny * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        Cell& cell = mesh.cells[box.cell_index(i, j, k)];
        cell.point = {0.5 * (spacings[0][i] + spacings[0][i + 1]),
                      0.5 * (spacings[1][j] + spacings[1][j + 1]),
                      0.5 * (spacings[2][k] + spacings[2][k + 1])};
      }

  std::vector<int> offsets{0};
  std::vector<int> loop_ids;
  auto push_face = [&](std::array<int, 4> loop, int owner, int neighbor) {
    for (int id : loop) loop_ids.push_back(id);
    offsets.push_back(static_cast<int>(loop_ids.size()));
    Face f;
    f.owner = owner;
    f.neighbor = neighbor;
    mesh.faces.push_back(f);
  };

  // x-normal planes; loop wound so the normal points toward the neighbor
  // (outward on the boundary).
  for (int i = 0; i <= nx; ++i)
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j) {
        std::array<int, 4> loop{vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)};
        if (i == 0) {
          std::reverse(loop.begin(), loop.end());
          push_face(loop, box.cell_index(0, j, k), -1);
        } else if (i == nx) {
          push_face(loop, box.cell_index(nx - 1, j, k), -1);
        } else {
          push_face(loop, box.cell_index(i - 1, j, k), box.cell_index(i, j, k));
        }
      }
  // y-normal planes
  for (int j = 0; j <= ny; ++j)
    for (int k = 0; k < nz; ++k)
      for (int i = 0; i < nx; ++i) {
        std::array<int, 4> loop{vid(i, j, k), vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j, k)};
        if (j == 0) {
          std::reverse(loop.begin(), loop.end());
          push_face(loop, box.cell_index(i, 0, k), -1);
        } else if (j == ny) {
          push_face(loop, box.cell_index(i, ny - 1, k), -1);
        } else {
          push_face(loop, box.cell_index(i, j - 1, k), box.cell_index(i, j, k));
        }
      }
  // z-normal planes
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        std::array<int, 4> loop{vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k)};
        if (k == 0) {
          std::reverse(loop.begin(), loop.end());
          push_face(loop, box.cell_index(i, j, 0), -1);
        } else if (k == nz) {
          push_face(loop, box.cell_index(i, j, nz - 1), -1);
        } else {
          push_face(loop, box.cell_index(i, j, k - 1), box.cell_index(i, j, k));
        }
      }

  mesh.set_face_loops(std::move(offsets), std::move(loop_ids));
  mesh.box = std::move(box);
  mesh.finalize();
  return mesh;
}

Mesh uniform_box_mesh(const std::array<double, 3>& extents, const std::array<int, 3>& cells) {
  std::array<std::vector<double>, 3> spacings;
  for (int a = 0; a < 3; ++a) {
    if (cells[a] < 1) throw InputError("cell count must be positive");
    spacings[a].resize(cells[a] + 1);
    for (int i = 0; i <= cells[a]; ++i) spacings[a][i] = extents[a] * i / cells[a];
  }
  return generate_box_mesh(extents, spacings);
}

Mesh refine_box_mesh(const Mesh& mesh) {
  if (!mesh.box) throw InputError("refine_box_mesh requires a generated box mesh");
  std::array<std::vector<double>, 3> spacings;
  for (int a = 0; a < 3; ++a) {
    const std::vector<double>& s = mesh.box->spacings[a];
    spacings[a].reserve(2 * s.size() - 1);
    for (size_t i = 0; i + 1 < s.size(); ++i) {
      spacings[a].push_back(s[i]);
      spacings[a].push_back(0.5 * (s[i] + s[i + 1]));
    }
    spacings[a].push_back(s.back());
  }
  return generate_box_mesh(mesh.box->extents, spacings);
}

// ---------------------------------------------------------------------------
// Smallest enclosing ball (Welzl, deterministic shuffle)

namespace {

struct Ball {
  Vec3 center;
  double r2 = -1.0;

  bool contains(const Vec3& p, double eps) const { return norm_sq(p - center) <= r2 + eps; }
};

Ball ball2(const Vec3& a, const Vec3& b) {
  Vec3 c = 0.5 * (a + b);
  return {c, norm_sq(a - c)};
}

Ball ball3(const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 u = b - a, v = c - a;
  Vec3 n = cross(u, v);
  double nn = norm_sq(n);
  if (nn < 1e-30) {  // collinear: widest pair
    Ball best = ball2(a, b);
    for (const Ball& cand : {ball2(a, c), ball2(b, c)})
      if (cand.r2 > best.r2) best = cand;
    return best;
  }
  Vec3 rel = (norm_sq(u) * cross(v, n) + norm_sq(v) * cross(n, u)) / (2.0 * nn);
  Vec3 center = a + rel;
  return {center, norm_sq(rel)};
}

Ball ball4(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  // Circumsphere via the linear system 2(p_i - a).x = |p_i|^2 - |a|^2.
  Vec3 u = b - a, v = c - a, w = d - a;
  double det = dot(u, cross(v, w));
  if (std::abs(det) < 1e-30) {
    Ball best{Vec3{}, -1.0};
    const Vec3* pts[4] = {&a, &b, &c, &d};
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        for (int k = j + 1; k < 4; ++k) {
          Ball cand = ball3(*pts[i], *pts[j], *pts[k]);
          if (cand.r2 > best.r2) best = cand;
        }
    return best;
  }
  double bu = 0.5 * norm_sq(u), bv = 0.5 * norm_sq(v), bw = 0.5 * norm_sq(w);
  Vec3 rel = (bu * cross(v, w) + bv * cross(w, u) + bw * cross(u, v)) / det;
  return {a + rel, norm_sq(rel)};
}

Ball ball_of_boundary(const std::vector<Vec3>& bnd) {
  switch (bnd.size()) {
    case 0: return {Vec3{}, -1.0};
    case 1: return {bnd[0], 0.0};
    case 2: return ball2(bnd[0], bnd[1]);
    case 3: return ball3(bnd[0], bnd[1], bnd[2]);
    default: return ball4(bnd[0], bnd[1], bnd[2], bnd[3]);
  }
}

Ball welzl(std::vector<Vec3>& pts, size_t n, std::vector<Vec3>& bnd, double eps) {
  if (n == 0 || bnd.size() == 4) return ball_of_boundary(bnd);
  Ball ball = welzl(pts, n - 1, bnd, eps);
  const Vec3& p = pts[n - 1];
  if (ball.r2 >= 0.0 && ball.contains(p, eps)) return ball;
  bnd.push_back(p);
  ball = welzl(pts, n - 1, bnd, eps);
  bnd.pop_back();
  // Move-to-front keeps the expected recursion depth small.
  std::rotate(pts.begin(), pts.begin() + (n - 1), pts.begin() + n);
  return ball;
}

uint64_t splitmix64(uint64_t& s) {
  uint64_t z = (s += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

double enclosing_ball_radius(const std::vector<Vec3>& points) {
  if (points.empty()) return 0.0;
  std::vector<Vec3> pts = points;
  uint64_t seed = 0x5eed0000u + pts.size();
  for (size_t i = pts.size(); i > 1; --i) std::swap(pts[i - 1], pts[splitmix64(seed) % i]);
  double scale2 = 0.0;
  for (const Vec3& p : pts) scale2 = std::max(scale2, norm_sq(p - pts[0]));
  std::vector<Vec3> bnd;
  Ball ball = welzl(pts, pts.size(), bnd, 1e-12 * std::max(scale2, 1e-300));
  return ball.r2 > 0.0 ? std::sqrt(ball.r2) : 0.0;
}

// ---------------------------------------------------------------------------

MeshMetrics mesh_metrics(const Mesh& mesh) {
  MeshMetrics m;
  m.cells = mesh.n_cells();
  m.faces = mesh.n_faces();
  m.interior_faces = mesh.interior_face_count();
  m.boundary_faces = m.faces - m.interior_faces;
  m.domain_volume = mesh.domain_volume;

  double pyramid_sum = 0.0;
  m.tau_min = std::numeric_limits<double>::infinity();
  m.tau_max = 0.0;
  for (const Face& f : mesh.faces) {
    pyramid_sum += f.area * f.d_sigma;
    m.tau_min = std::min(m.tau_min, f.tau);
    m.tau_max = std::max(m.tau_max, f.tau);
  }
  m.pyramid_residual = pyramid_sum - 3.0 * mesh.domain_volume;

  m.volume_min = std::numeric_limits<double>::infinity();
  m.volume_max = 0.0;
  for (const Cell& c : mesh.cells) {
    m.cell_volume_sum += c.volume;
    m.volume_min = std::min(m.volume_min, c.volume);
    m.volume_max = std::max(m.volume_max, c.volume);
  }

  if (mesh.box) {
    std::array<double, 3> hmax{};
    for (int a = 0; a < 3; ++a) {
      const std::vector<double>& s = mesh.box->spacings[a];
      for (size_t i = 0; i + 1 < s.size(); ++i) hmax[a] = std::max(hmax[a], s[i + 1] - s[i]);
    }
    m.mesh_norm = 0.5 * std::sqrt(hmax[0] * hmax[0] + hmax[1] * hmax[1] + hmax[2] * hmax[2]);
  } else {
    for (int c = 0; c < mesh.n_cells(); ++c) {
      std::vector<int> ids = mesh.cell_vertices(c);
      std::vector<Vec3> pts;
      pts.reserve(ids.size());
      for (int id : ids) pts.push_back(mesh.vertices[id]);
      m.mesh_norm = std::max(m.mesh_norm, enclosing_ball_radius(pts));
    }
  }
  return m;
}

}  // namespace pfvm
