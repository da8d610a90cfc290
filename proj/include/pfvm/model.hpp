#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "pfvm/vec3.hpp"

namespace pfvm {

/// Saturation interval data for the reaction limiter: identity on [h0, h1],
/// arctan tails approaching (h_inf, h_sup).
struct LimiterKnots {
  double h_inf = -4.0;
  double h0 = -2.0;
  double h1 = 2.0;
  double h_sup = 4.0;
};

struct ModelParams {
  double latent_heat = 1.0;  ///< L
  double relax = 1.0;        ///< alpha
  double beta = 1.0;
  double b = 1.0;
  double xi = 0.05;          ///< diffuse interface thickness
  LimiterKnots knots;
  /// Sign of the limited coupling term in the phase equation; the model is
  /// stated with both conventions, the discretized form uses -1.
  int coupling_sign = -1;
  /// Lipschitz bound of the limited coupling as a function of the state,
  /// consumed by the time-step heuristic.
  double coupling_lipschitz = 1.0;
  std::string g_name = "u";
  /// Coupling drive g(u, p); pluggable, defaults to the supercooling drive u.
  std::function<double(double, double)> g = [](double u, double) { return u; };

  /// Bound on |limiter| over the reals.
  double limiter_bound() const;
  /// Throws InputError naming the offending field(s).
  void validate() const;
};

/// Cubic reaction: p (1 - p) (p - 1/2).
inline double reaction_cubic(double p) { return p * (1.0 - p) * (p - 0.5); }

/// Double-well potential x^2 (x - 1)^2 / 4; its negative derivative is the
/// cubic reaction.
inline double double_well(double x) {
  double xm1 = x - 1.0;
  return 0.25 * x * x * xm1 * xm1;
}

/// C1 saturation: identity on [h0, h1], arctan tails with range inside
/// (h_inf, h_sup).
inline double limiter(double x, const LimiterKnots& k) {
  constexpr double half_pi = 1.5707963267948966;
  if (x > k.h1) {
    double span = k.h_sup - k.h1;
    return k.h1 + (span / half_pi) * std::atan(half_pi * (x - k.h1) / span);
  }
  if (x < k.h0) {
    double span = k.h_inf - k.h0;  // negative
    return k.h0 + (span / half_pi) * std::atan(half_pi * (x - k.h0) / span);
  }
  return x;
}

struct ReactionTerms {
  double cubic = 0.0;     ///< reaction_cubic(p)
  double well = 0.0;      ///< double_well(p)
  double limited = 0.0;   ///< limiter(g(u, p))
};

ReactionTerms reaction_terms(double u, double p, const ModelParams& params);

/// Smallest constant c with double_well(x) + c >= x^2 for all x, found by
/// bracketing the minimum of the quartic difference.
double double_well_constant();

/// Dirichlet boundary values sampled at the face foot points.
struct BoundaryData {
  std::function<double(const Vec3&)> u;
  std::function<double(const Vec3&)> p;
  bool homogeneous = true;

  static BoundaryData zero() { return {}; }
  static BoundaryData analytic(std::function<double(const Vec3&)> bu,
                               std::function<double(const Vec3&)> bp) {
    return {std::move(bu), std::move(bp), false};
  }

  double u_at(const Vec3& y) const { return homogeneous ? 0.0 : u(y); }
  double p_at(const Vec3& y) const { return homogeneous ? 0.0 : p(y); }
};

}  // namespace pfvm
