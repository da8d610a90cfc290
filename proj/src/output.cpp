#include "pfvm/output.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>

#include "pfvm/errors.hpp"

namespace pfvm {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_vtk_snapshot(const Mesh& mesh, const MeshFunction& u, const MeshFunction& p,
                        const std::string& path, const std::string& title) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open file for writing: " + path);

  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_vertices() << " double\n";
  for (const Vec3& v : mesh.vertices) out << fmt(v.x) << ' ' << fmt(v.y) << ' ' << fmt(v.z) << '\n';

  std::vector<std::vector<int>> cell_points(mesh.n_cells());
  int total = 0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    cell_points[c] = mesh.cell_vertices(c);
    total += static_cast<int>(cell_points[c].size()) + 1;
  }
  out << "CELLS " << mesh.n_cells() << ' ' << total << '\n';
  const bool hexahedral = mesh.box.has_value();
  for (int c = 0; c < mesh.n_cells(); ++c) {
    if (hexahedral) {
      // vertex grid order: x fastest; hexahedron ordering is the bottom loop
      // then the top loop, counterclockwise seen from above
      const BoxStructure& box = *mesh.box;
      const int nx = box.dims[0], ny = box.dims[1];
      int i = c % nx, j = (c / nx) % ny, k = c / (nx * ny);
      auto vid = [&](int ii, int jj, int kk) { return (kk * (ny + 1) + jj) * (nx + 1) + ii; };
      out << "8 " << vid(i, j, k) << ' ' << vid(i + 1, j, k) << ' ' << vid(i + 1, j + 1, k) << ' '
          << vid(i, j + 1, k) << ' ' << vid(i, j, k + 1) << ' ' << vid(i + 1, j, k + 1) << ' '
          << vid(i + 1, j + 1, k + 1) << ' ' << vid(i, j + 1, k + 1) << '\n';
    } else {
      out << cell_points[c].size();
      for (int id : cell_points[c]) out << ' ' << id;
      out << '\n';
    }
  }
  out << "CELL_TYPES " << mesh.n_cells() << '\n';
  for (int c = 0; c < mesh.n_cells(); ++c) out << (hexahedral ? 12 : 41) << '\n';

  out << "CELL_DATA " << mesh.n_cells() << '\n';
  out << "SCALARS u double 1\nLOOKUP_TABLE default\n";
  for (int c = 0; c < mesh.n_cells(); ++c) out << fmt(u[c]) << '\n';
  out << "SCALARS p double 1\nLOOKUP_TABLE default\n";
  for (int c = 0; c < mesh.n_cells(); ++c) out << fmt(p[c]) << '\n';
  if (!out) throw InputError("write failed: " + path);
}

void write_ledger_csv(const std::vector<LedgerRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open file for writing: " + path);
  out << "t,norm2_pdot,norm2_udot,semi2_p,semi2_u,well_energy,int_pdot,int_udot,lhs,rhs,margin\n";
  for (const LedgerRow& r : rows) {
    out << fmt(r.t) << ',' << fmt(r.norm2_pdot) << ',' << fmt(r.norm2_udot) << ',' << fmt(r.semi2_p)
        << ',' << fmt(r.semi2_u) << ',' << fmt(r.well_energy) << ',' << fmt(r.int_pdot) << ','
        << fmt(r.int_udot) << ',' << fmt(r.lhs) << ',' << fmt(r.rhs) << ',' << fmt(r.margin)
        << '\n';
  }
  if (!out) throw InputError("write failed: " + path);
}

void write_study_csv(const ConvergenceTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open file for writing: " + path);
  out << "level,mesh_norm,diff_u,diff_p,order_u,order_p,flux_residual\n";
  for (const StudyRow& r : table.rows) {
    out << r.level << ',' << fmt(r.mesh_norm) << ',' << fmt(r.diff_u) << ',' << fmt(r.diff_p) << ','
        << fmt(r.order_u) << ',' << fmt(r.order_p) << ',' << fmt(r.flux_residual) << '\n';
  }
  if (!out) throw InputError("write failed: " + path);
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot hash missing file: " + path);

  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw InputError("digest initialization failed");
  }
  char buf[1 << 16];
  while (in.good()) {
    in.read(buf, sizeof buf);
    std::streamsize got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx, buf, static_cast<size_t>(got));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);

  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

void Manifest::add(const std::string& path, const std::string& name) {
  entries_[name] = sha256_file(path);
}

void Manifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open file for writing: " + path);
  for (const auto& [name, digest] : entries_) out << digest << "  " << name << '\n';
  if (!out) throw InputError("write failed: " + path);
}

}  // namespace pfvm
