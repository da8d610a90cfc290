#pragma once

#include <map>
#include <string>
#include <vector>

#include "pfvm/analysis.hpp"
#include "pfvm/interp.hpp"
#include "pfvm/mesh.hpp"

namespace pfvm {

/// One refinement level of a convergence study.
struct StudyRow {
  int level = 0;
  double mesh_norm = 0.0;
  double diff_u = 0.0;       ///< space-time L2 difference (or error vs. manufactured solution)
  double diff_p = 0.0;
  double order_u = 0.0;      ///< log2 ratio against the previous level, 0 on the first row
  double order_p = 0.0;
  double flux_residual = 0.0;
};

struct ConvergenceTable {
  std::vector<StudyRow> rows;
};

/// Legacy ASCII unstructured-grid snapshot carrying cell scalars u and p.
/// Box cells are written as hexahedra, general convex cells as convex point
/// sets.
void write_vtk_snapshot(const Mesh& mesh, const MeshFunction& u, const MeshFunction& p,
                        const std::string& path, const std::string& title);

/// Fixed-header ledger CSV:
/// t,norm2_pdot,norm2_udot,semi2_p,semi2_u,well_energy,int_pdot,int_udot,lhs,rhs,margin
void write_ledger_csv(const std::vector<LedgerRow>& rows, const std::string& path);

/// Fixed-header study CSV:
/// level,mesh_norm,diff_u,diff_p,order_u,order_p,flux_residual
void write_study_csv(const ConvergenceTable& table, const std::string& path);

/// Collects written files and emits `manifest.txt` with one
/// "<sha256>  <name>" line per file, sorted by name.
class Manifest {
 public:
  /// Hashes the file on disk and records it under its base name.
  void add(const std::string& path, const std::string& name);
  void write(const std::string& path) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;  // name -> hex digest
};

std::string sha256_file(const std::string& path);

}  // namespace pfvm
