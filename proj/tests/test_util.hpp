#pragma once

#include <functional>
#include <random>
#include <vector>

#include "pfvm/interp.hpp"
#include "pfvm/mesh.hpp"

namespace pfvm::testing {

/// Random strictly increasing coordinate list covering [0, extent].
inline std::vector<double> random_spacings(std::mt19937_64& rng, double extent, int cells) {
  std::uniform_real_distribution<double> inc(0.2, 1.0);
  std::vector<double> s(cells + 1);
  s[0] = 0.0;
  for (int i = 1; i <= cells; ++i) s[i] = s[i - 1] + inc(rng);
  for (int i = 0; i <= cells; ++i) s[i] = s[i] * extent / s[cells];
  s[cells] = extent;
  return s;
}

inline Mesh random_graded_box(std::mt19937_64& rng, int max_cells_per_axis = 6) {
  std::uniform_int_distribution<int> ncells(1, max_cells_per_axis);
  std::uniform_real_distribution<double> ext(0.5, 2.0);
  std::array<double, 3> extents{ext(rng), ext(rng), ext(rng)};
  std::array<std::vector<double>, 3> spacings;
  for (int a = 0; a < 3; ++a) spacings[a] = random_spacings(rng, extents[a], ncells(rng));
  return generate_box_mesh(extents, spacings);
}

inline MeshFunction random_function(std::mt19937_64& rng, const Mesh& mesh, double lo = -1.0,
                                    double hi = 1.0) {
  std::uniform_real_distribution<double> val(lo, hi);
  MeshFunction w(mesh);
  for (int c = 0; c < mesh.n_cells(); ++c) w[c] = val(rng);
  return w;
}

/// Composite-Simpson integral of f over [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Axial quadrature oracle for the linear interpolant's L2 norm over one
/// dual cell: 1D Simpson along the axis with the exact quadratic
/// cross-section area law, one sweep per pyramid side.
inline double linear_l2_simpson(double area, double d_k, double d_l, double wk, double wl,
                                int panels = 64) {
  double D = d_k + d_l;
  auto q = [&](double a1) { return wk + (a1 + d_k) / D * (wl - wk); };
  double left = simpson(
      [&](double a1) {
        double scale = (d_k + a1) / d_k;
        return q(a1) * q(a1) * area * scale * scale;
      },
      -d_k, 0.0, panels);
  if (d_l <= 0.0) return left;
  double right = simpson(
      [&](double a1) {
        double scale = (d_l - a1) / d_l;
        return q(a1) * q(a1) * area * scale * scale;
      },
      0.0, d_l, panels);
  return left + right;
}

/// Same oracle under the linear cross-section law (2D pyramids).
inline double linear_l2_simpson_linear_law(double area, double d_k, double d_l, double wk,
                                           double wl, int panels = 64) {
  double D = d_k + d_l;
  auto q = [&](double a1) { return wk + (a1 + d_k) / D * (wl - wk); };
  double left = simpson(
      [&](double a1) { return q(a1) * q(a1) * area * (d_k + a1) / d_k; }, -d_k, 0.0, panels);
  double right = simpson(
      [&](double a1) { return q(a1) * q(a1) * area * (d_l - a1) / d_l; }, 0.0, d_l, panels);
  return left + right;
}

/// Golden-section minimizer on a bracket (unimodal f).
inline double golden_min(const std::function<double(double)>& f, double a, double b,
                         double resolution = 1e-7) {
  const double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  while (b - a > resolution) {
    if (f(c) < f(d)) {
      b = d;
      d = c;
      c = b - inv_phi * (b - a);
    } else {
      a = c;
      c = d;
      d = a + inv_phi * (b - a);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace pfvm::testing
