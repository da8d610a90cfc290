#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "pfvm/mesh.hpp"

namespace pfvm {

namespace {

struct P2 {
  double x, y;
};

double signed_area(const std::vector<P2>& poly) {
  double a = 0.0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const P2& p = poly[i];
    const P2& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

// Sutherland-Hodgman clip of a polygon against one half-plane (left of a->b).
std::vector<P2> clip_halfplane(const std::vector<P2>& poly, const P2& a, const P2& b) {
  std::vector<P2> out;
  const double ex = b.x - a.x, ey = b.y - a.y;
  auto side = [&](const P2& p) { return ex * (p.y - a.y) - ey * (p.x - a.x); };
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const P2& p = poly[i];
    const P2& q = poly[(i + 1) % n];
    double sp = side(p), sq = side(q);
    if (sp >= 0.0) out.push_back(p);
    if ((sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0)) {
      double t = sp / (sp - sq);
      out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
    }
  }
  return out;
}

double convex_overlap_area(std::vector<P2> subject, std::vector<P2> clip) {
  if (signed_area(subject) < 0.0) std::reverse(subject.begin(), subject.end());
  if (signed_area(clip) < 0.0) std::reverse(clip.begin(), clip.end());
  for (size_t i = 0; i < clip.size() && subject.size() > 2; ++i)
    subject = clip_halfplane(subject, clip[i], clip[(i + 1) % clip.size()]);
  return subject.size() > 2 ? std::abs(signed_area(subject)) : 0.0;
}

struct PlaneBasis {
  Vec3 u, v;
};

PlaneBasis plane_basis(const Vec3& n) {
  Vec3 ref = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 u = normalized(cross(n, ref));
  return {u, cross(n, u)};
}

void add_violation(ConditionReport& rep, int a, int b, double magnitude, std::string what) {
  rep.pass = false;
  rep.worst = std::max(rep.worst, magnitude);
  if (rep.violations.size() < 64) rep.violations.push_back({a, b, magnitude, std::move(what)});
}

}  // namespace

AdmissibilityReport validate_admissibility(const Mesh& mesh, double rel_tol, double angle_tol) {
  AdmissibilityReport report;
  report.tolerance = rel_tol;
  report.angle_tolerance = angle_tol;
  ConditionReport& partition = report.conditions[0];
  ConditionReport& closure = report.conditions[1];
  ConditionReport& intersections = report.conditions[2];
  ConditionReport& points = report.conditions[3];
  ConditionReport& orthogonality = report.conditions[4];

  double diameter = 0.0;
  if (!mesh.vertices.empty()) {
    Vec3 lo = mesh.vertices[0], hi = mesh.vertices[0];
    for (const Vec3& v : mesh.vertices)
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], v[a]);
        hi[a] = std::max(hi[a], v[a]);
      }
    diameter = distance(lo, hi);
  }

  // Condition 1: cells partition the domain up to measure zero.
  double volume_sum = 0.0;
  for (const Cell& c : mesh.cells) volume_sum += c.volume;
  {
    double resid = std::abs(volume_sum - mesh.domain_volume);
    partition.worst = resid;
    if (resid > rel_tol * std::max(mesh.domain_volume, 1e-300))
      add_violation(partition, -1, -1, resid, "cell volumes do not sum to the domain volume");
  }

  // Condition 2: each cell boundary is exactly the union of its faces.
  // Closed-surface moment identities: sum of m*n vanishes and the first
  // moment tensor equals V*I for any closed boundary.
  for (int c = 0; c < mesh.n_cells(); ++c) {
    Vec3 area_vec;
    double surface = 0.0;
    std::array<std::array<double, 3>, 3> moment{};
    for (int f : mesh.cell_faces(c)) {
      const Face& face = mesh.faces[f];
      Vec3 n = mesh.outward_normal(f, c);
      area_vec += face.area * n;
      surface += face.area;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) moment[i][j] += face.area * n[i] * face.centroid[j];
    }
    double v = mesh.cells[c].volume;
    double resid = norm(area_vec) / std::max(surface, 1e-300);
    double moment_resid = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double expect = i == j ? v : 0.0;
        moment_resid += (moment[i][j] - expect) * (moment[i][j] - expect);
      }
    moment_resid = std::sqrt(moment_resid) / std::max(v, 1e-300);
    double worst = std::max(resid, moment_resid);
    closure.worst = std::max(closure.worst, worst);
    if (v <= 0.0)
      add_violation(closure, c, -1, -v, "cell has non-positive volume");
    else if (worst > rel_tol * 1e3)  // moment identities amplify roundoff; keep a margin
      add_violation(closure, c, -1, worst, "cell faces do not close its boundary");
  }

  // Condition 3: two cells share at most one full face or a null set.
  // (a) no cell pair may be joined by more than one face entity;
  {
    std::map<std::pair<int, int>, int> pair_count;
    for (const Face& f : mesh.faces)
      if (!f.boundary()) ++pair_count[{std::min(f.owner, f.neighbor), std::max(f.owner, f.neighbor)}];
    for (const auto& [cells, count] : pair_count)
      if (count > 1)
        add_violation(intersections, cells.first, cells.second, count,
                      "cell pair joined by more than one face");
  }
  // (b) no two distinct face entities may overlap with positive area.
  {
    struct Key {
      int64_t nx, ny, nz, off;
      bool operator<(const Key& o) const {
        return std::tie(nx, ny, nz, off) < std::tie(o.nx, o.ny, o.nz, o.off);
      }
    };
    const double off_quantum = std::max(1e-9 * std::max(diameter, 1e-300), 1e-300);
    auto face_key = [&](int f, int64_t off_shift) {
      Vec3 n = mesh.faces[f].normal;
      // canonical sign: largest-magnitude component positive
      int lead = 0;
      for (int a = 1; a < 3; ++a)
        if (std::abs(n[a]) > std::abs(n[lead])) lead = a;
      if (n[lead] < 0.0) n = -1.0 * n;
      double off = dot(mesh.faces[f].centroid, n);
      return Key{llround(n.x * 1e6), llround(n.y * 1e6), llround(n.z * 1e6),
                 llround(off / off_quantum) + off_shift};
    };
    std::map<Key, std::vector<int>> buckets;
    for (int f = 0; f < mesh.n_faces(); ++f) buckets[face_key(f, 0)].push_back(f);

    auto project = [&](int f, const PlaneBasis& basis, const Vec3& origin) {
      std::vector<P2> poly;
      for (int id : mesh.face_vertices(f)) {
        Vec3 r = mesh.vertices[id] - origin;
        poly.push_back({dot(r, basis.u), dot(r, basis.v)});
      }
      return poly;
    };

    auto check_pair = [&](int fa, int fb) {
      const Face& a = mesh.faces[fa];
      const Face& b = mesh.faces[fb];
      if (std::abs(dot(a.normal, b.normal)) < 1.0 - 1e-6) return;
      if (std::abs(dot(b.centroid - a.centroid, a.normal)) > 4.0 * off_quantum) return;
      PlaneBasis basis = plane_basis(a.normal);
      double overlap = convex_overlap_area(project(fa, basis, a.centroid), project(fb, basis, a.centroid));
      double min_area = std::min(a.area, b.area);
      if (overlap > std::max(rel_tol, 1e-12) * min_area)
        add_violation(intersections, fa, fb, overlap, "distinct faces overlap with positive area");
    };

    // In-plane 2D hash grid prefilter: whole grid planes of a box mesh land
    // in one bucket, so quadratic in-bucket scans are not an option.
    auto bucket_pairs = [&](const std::vector<int>& bucket, std::vector<std::pair<int, int>>& out) {
      if (bucket.size() < 2) return;
      PlaneBasis basis = plane_basis(mesh.faces[bucket[0]].normal);
      Vec3 origin = mesh.faces[bucket[0]].centroid;
      struct BBox {
        double lo_u, hi_u, lo_v, hi_v;
      };
      std::vector<BBox> boxes(bucket.size());
      double cell_size = 0.0;
      for (size_t i = 0; i < bucket.size(); ++i) {
        BBox bb{1e300, -1e300, 1e300, -1e300};
        for (int id : mesh.face_vertices(bucket[i])) {
          Vec3 r = mesh.vertices[id] - origin;
          double u = dot(r, basis.u), v = dot(r, basis.v);
          bb.lo_u = std::min(bb.lo_u, u);
          bb.hi_u = std::max(bb.hi_u, u);
          bb.lo_v = std::min(bb.lo_v, v);
          bb.hi_v = std::max(bb.hi_v, v);
        }
        boxes[i] = bb;
        cell_size = std::max({cell_size, bb.hi_u - bb.lo_u, bb.hi_v - bb.lo_v});
      }
      cell_size = std::max(cell_size, 1e-300);
      std::unordered_map<int64_t, std::vector<int>> grid;
      auto grid_key = [](int64_t gx, int64_t gy) { return (gx << 32) ^ (gy & 0xffffffffll); };
      for (size_t i = 0; i < bucket.size(); ++i) {
        const BBox& bb = boxes[i];
        for (auto gx = static_cast<int64_t>(std::floor(bb.lo_u / cell_size));
             gx <= static_cast<int64_t>(std::floor(bb.hi_u / cell_size)); ++gx)
          for (auto gy = static_cast<int64_t>(std::floor(bb.lo_v / cell_size));
               gy <= static_cast<int64_t>(std::floor(bb.hi_v / cell_size)); ++gy)
            grid[grid_key(gx, gy)].push_back(static_cast<int>(i));
      }
      for (const auto& [key, members] : grid)
        for (size_t ii = 0; ii < members.size(); ++ii)
          for (size_t jj = ii + 1; jj < members.size(); ++jj) {
            int i = members[ii], j = members[jj];
            const BBox& a = boxes[i];
            const BBox& b = boxes[j];
            if (a.lo_u > b.hi_u || b.lo_u > a.hi_u || a.lo_v > b.hi_v || b.lo_v > a.hi_v) continue;
            out.emplace_back(std::min(bucket[i], bucket[j]), std::max(bucket[i], bucket[j]));
          }
    };

    std::vector<std::pair<int, int>> candidates;
    for (auto& [key, bucket] : buckets) {
      bucket_pairs(bucket, candidates);
      // pairs straddling the offset quantization boundary (rare)
      Key up = key;
      up.off += 1;
      auto it = buckets.find(up);
      if (it != buckets.end())
        for (int fa : bucket)
          for (int fb : it->second)
            candidates.emplace_back(std::min(fa, fb), std::max(fa, fb));
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (const auto& [fa, fb] : candidates) check_pair(fa, fb);
  }

  // Condition 4: one significant point per cell, inside its closure.
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Vec3& x = mesh.cells[c].point;
    double scale = std::cbrt(std::max(mesh.cells[c].volume, 1e-300));
    double outside = 0.0;
    bool incident = false;
    for (int f : mesh.cell_faces(c)) {
      double s = dot(x - mesh.faces[f].centroid, mesh.outward_normal(f, c));
      outside = std::max(outside, s);
      if (std::abs(s) <= rel_tol * scale) incident = true;
    }
    points.worst = std::max(points.worst, outside);
    if (outside > rel_tol * scale)
      add_violation(points, c, -1, outside, "significant point lies outside the cell");
    else if (incident)
      report.boundary_incident_points.push_back(c);
  }

  // Condition 5: distinct points, segment orthogonal to the face, and the
  // distance split d_sigma = d_K + d_L.
  for (int f = 0; f < mesh.n_faces(); ++f) {
    const Face& face = mesh.faces[f];
    if (face.tau <= 0.0)
      add_violation(orthogonality, f, -1, -face.tau, "non-positive transmissibility");
    if (face.boundary()) {
      if (face.d_owner <= rel_tol * std::max(face.d_sigma, 1e-300))
        add_violation(orthogonality, f, face.owner, face.d_owner,
                      "significant point lies on its boundary face plane");
      continue;
    }
    const Vec3& xk = mesh.cells[face.owner].point;
    const Vec3& xl = mesh.cells[face.neighbor].point;
    double sep = distance(xk, xl);
    if (sep <= 0.0) {
      add_violation(orthogonality, f, -1, 0.0, "adjacent cells share their significant point");
      continue;
    }
    Vec3 dir = (xl - xk) / sep;
    double angle = std::asin(std::min(1.0, norm(cross(dir, face.normal))));
    if (angle > angle_tol)
      add_violation(orthogonality, f, -1, angle, "segment between points is not orthogonal to the face");
    double split = std::abs(face.d_sigma - face.d_owner - face.d_neighbor);
    orthogonality.worst = std::max(orthogonality.worst, split / std::max(face.d_sigma, 1e-300));
    if (split > rel_tol * std::max(face.d_sigma, 1e-300))
      add_violation(orthogonality, f, -1, split, "distance split d = d_K + d_L violated");
  }

  return report;
}

}  // namespace pfvm
