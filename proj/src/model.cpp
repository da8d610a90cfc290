#include "pfvm/model.hpp"

#include <cmath>
#include <numbers>

#include "pfvm/errors.hpp"

namespace pfvm {

double ModelParams::limiter_bound() const {
  return std::max(std::abs(knots.h_inf), std::abs(knots.h_sup));
}

void ModelParams::validate() const {
  if (!(latent_heat > 0.0)) throw InputError("latent_heat must be positive");
  if (!(relax > 0.0)) throw InputError("relax must be positive");
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  if (!(b > 0.0)) throw InputError("b must be positive");
  if (!(xi > 0.0)) throw InputError("xi must be positive");
  if (!(knots.h0 < knots.h1))
    throw InputError("limiter knots violate H0 < H1 (keys limiter.H0, limiter.H1)");
  if (!(knots.h_inf < knots.h0))
    throw InputError("limiter knots violate H_inf < H0 (keys limiter.H_inf, limiter.H0)");
  if (!(knots.h1 < knots.h_sup))
    throw InputError("limiter knots violate H1 < H_sup (keys limiter.H1, limiter.H_sup)");
  if (!(knots.h0 <= 0.0)) throw InputError("limiter knot H0 must be <= 0 (key limiter.H0)");
  if (!(knots.h1 >= 0.0)) throw InputError("limiter knot H1 must be >= 0 (key limiter.H1)");
  if (coupling_sign != 1 && coupling_sign != -1) throw InputError("coupling_sign must be +1 or -1");
  if (!(coupling_lipschitz > 0.0)) throw InputError("coupling_lipschitz must be positive");
  if (!g) throw InputError("coupling drive g is not set");
}

ReactionTerms reaction_terms(double u, double p, const ModelParams& params) {
  ReactionTerms t;
  t.cubic = reaction_cubic(p);
  t.well = double_well(p);
  t.limited = limiter(params.g(u, p), params.knots);
  return t;
}

namespace {

// Minimum of double_well(x) - x^2 over [-1, 3]: coarse bracketing scan
// followed by golden-section refinement.
double compute_well_constant() {
  auto f = [](double x) { return double_well(x) - x * x; };
  const double lo = -1.0, hi = 3.0;
  const int n = 4000;
  int best = 0;
  double best_val = f(lo);
  for (int i = 1; i <= n; ++i) {
    double x = lo + (hi - lo) * i / n;
    if (f(x) < best_val) {
      best_val = f(x);
      best = i;
    }
  }
  double a = lo + (hi - lo) * std::max(0, best - 1) / n;
  double b = lo + (hi - lo) * std::min(n, best + 1) / n;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  while (b - a > 1e-13) {
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
  return -f(0.5 * (a + b));
}

}  // namespace

double double_well_constant() {
  static const double value = compute_well_constant();
  return value;
}

}  // namespace pfvm
