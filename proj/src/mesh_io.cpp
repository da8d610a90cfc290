#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pfvm/errors.hpp"
#include "pfvm/mesh.hpp"

namespace pfvm {

namespace {

// Strips comments and skips blank lines; returns false at end of stream.
bool next_payload_line(std::istream& in, std::string& line, int& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    size_t begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    line.erase(0, begin);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
      line.pop_back();
    return true;
  }
  return false;
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

long parse_int(const std::string& t, int lineno) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw FormatError("expected integer, got '" + t + "'", lineno);
  return value;
}

double parse_double(const std::string& t, int lineno) {
  try {
    size_t used = 0;
    double value = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return value;
  } catch (const std::exception&) {
    throw FormatError("expected number, got '" + t + "'", lineno);
  }
}

}  // namespace

Mesh load_mesh(const std::string& path, double planarity_tol) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open mesh file: " + path);

  int lineno = 0;
  std::string line;

  if (!next_payload_line(in, line, lineno) || tokens(line) != std::vector<std::string>{"PFVM-MESH", "1"})
    throw FormatError("expected header 'PFVM-MESH 1'", lineno);

  if (!next_payload_line(in, line, lineno)) throw FormatError("missing counts line", lineno);
  auto counts = tokens(line);
  if (counts.size() != 4 || counts[0] != "counts")
    throw FormatError("expected 'counts <nVertices> <nFaces> <nCells>'", lineno);
  const long nv = parse_int(counts[1], lineno);
  const long nf = parse_int(counts[2], lineno);
  const long nc = parse_int(counts[3], lineno);
  if (nv < 0 || nf < 0 || nc < 0) throw FormatError("negative count", lineno);
  if (nc == 0) throw FormatError("empty cell list", lineno);

  Mesh mesh;
  mesh.vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    if (!next_payload_line(in, line, lineno)) throw FormatError("unexpected end of file in vertices", lineno);
    auto t = tokens(line);
    if (t.size() != 4 || t[0] != "v") throw FormatError("expected 'v <x> <y> <z>'", lineno);
    mesh.vertices.push_back({parse_double(t[1], lineno), parse_double(t[2], lineno), parse_double(t[3], lineno)});
  }

  std::vector<int> offsets{0};
  std::vector<int> loop_ids;
  std::vector<int> face_lines;
  mesh.faces.reserve(nf);
  for (long f = 0; f < nf; ++f) {
    if (!next_payload_line(in, line, lineno)) throw FormatError("unexpected end of file in faces", lineno);
    auto t = tokens(line);
    if (t.size() < 2 || t[0] != "f")
      throw FormatError("expected 'f <nVerts> <ids...> <owner> <neighbor>'", lineno);
    const long nverts = parse_int(t[1], lineno);
    if (nverts < 3) throw FormatError("face needs at least 3 vertices", lineno);
    if (static_cast<long>(t.size()) != nverts + 4)
      throw FormatError("face line has wrong token count", lineno);
    for (long i = 0; i < nverts; ++i) {
      long id = parse_int(t[2 + i], lineno);
      if (id < 0 || id >= nv) throw FormatError("vertex reference out of range: " + std::to_string(id), lineno);
      loop_ids.push_back(static_cast<int>(id));
    }
    std::span<const int> loop{loop_ids.data() + offsets.back(), static_cast<size_t>(nverts)};
    for (long i = 0; i < nverts; ++i)
      for (long j = i + 1; j < nverts; ++j)
        if (loop[i] == loop[j]) throw FormatError("face repeats a vertex", lineno);
    offsets.push_back(static_cast<int>(loop_ids.size()));

    Face face;
    long owner = parse_int(t[2 + nverts], lineno);
    long neighbor = parse_int(t[3 + nverts], lineno);
    if (owner < 0 || owner >= nc)
      throw FormatError("face references missing owner cell " + std::to_string(owner), lineno);
    if (neighbor < -1 || neighbor >= nc)
      throw FormatError("face references missing neighbor cell " + std::to_string(neighbor), lineno);
    if (neighbor == owner) throw FormatError("face owner equals neighbor", lineno);
    face.owner = static_cast<int>(owner);
    face.neighbor = static_cast<int>(neighbor);
    mesh.faces.push_back(face);
    face_lines.push_back(lineno);
  }

  mesh.cells.resize(nc);
  for (long c = 0; c < nc; ++c) {
    if (!next_payload_line(in, line, lineno)) throw FormatError("unexpected end of file in cells", lineno);
    auto t = tokens(line);
    if (t.size() != 4 || t[0] != "c") throw FormatError("expected 'c <x> <y> <z>'", lineno);
    mesh.cells[c].point = {parse_double(t[1], lineno), parse_double(t[2], lineno), parse_double(t[3], lineno)};
  }
  if (next_payload_line(in, line, lineno)) throw FormatError("trailing content after cell list", lineno);

  mesh.set_face_loops(std::move(offsets), std::move(loop_ids));
  mesh.finalize();

  // Geometric sanity that must hold before admissibility is even a question.
  std::vector<int> face_use(nc, 0);
  for (int f = 0; f < mesh.n_faces(); ++f) {
    const Face& face = mesh.faces[f];
    ++face_use[face.owner];
    if (face.neighbor >= 0) ++face_use[face.neighbor];
    if (face.area <= 0.0) throw FormatError("degenerate face (zero area)", face_lines[f]);
  }
  for (long c = 0; c < nc; ++c)
    if (face_use[c] == 0)
      throw FormatError("cell " + std::to_string(c) + " has no faces", 0);

  for (int f = 0; f < mesh.n_faces(); ++f) {
    const Face& face = mesh.faces[f];
    std::span<const int> loop = mesh.face_vertices(f);
    double diameter = 0.0;
    for (size_t i = 0; i < loop.size(); ++i)
      for (size_t j = i + 1; j < loop.size(); ++j)
        diameter = std::max(diameter, distance(mesh.vertices[loop[i]], mesh.vertices[loop[j]]));
    double planarity = 0.0;
    for (int id : loop)
      planarity = std::max(planarity, std::abs(dot(mesh.vertices[id] - face.centroid, face.normal)));
    if (planarity > planarity_tol * std::max(diameter, 1e-300))
      throw FormatError("face is not planar within tolerance", face_lines[f]);

    double tol = 1e-12 * std::max(diameter, 1e-300);
    double side_owner = dot(face.centroid - mesh.cells[face.owner].point, face.normal);
    if (side_owner < -tol)
      throw FormatError("face normal does not point away from its owner", face_lines[f]);
    if (face.neighbor >= 0) {
      double side_neighbor = dot(face.centroid - mesh.cells[face.neighbor].point, face.normal);
      if (side_neighbor > tol)
        throw FormatError("face normal does not point toward its neighbor", face_lines[f]);
    }
  }

  return mesh;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open file for writing: " + path);
  char buf[96];
  out << "PFVM-MESH 1\n";
  out << "counts " << mesh.n_vertices() << ' ' << mesh.n_faces() << ' ' << mesh.n_cells() << '\n';
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
    out << buf;
  }
  for (int f = 0; f < mesh.n_faces(); ++f) {
    std::span<const int> loop = mesh.face_vertices(f);
    out << "f " << loop.size();
    for (int id : loop) out << ' ' << id;
    out << ' ' << mesh.faces[f].owner << ' ' << mesh.faces[f].neighbor << '\n';
  }
  for (const Cell& c : mesh.cells) {
    std::snprintf(buf, sizeof buf, "c %.17g %.17g %.17g\n", c.point.x, c.point.y, c.point.z);
    out << buf;
  }
  if (!out) throw InputError("write failed: " + path);
}

}  // namespace pfvm
