#include <doctest.h>

#include <cmath>

#include "pfvm/errors.hpp"
#include "pfvm/scheme.hpp"
#include "test_util.hpp"

using namespace pfvm;
using namespace pfvm::testing;

namespace {

SolverState make_state(MeshFunction u, MeshFunction p, const ModelParams& params,
                       const SourceTerms* sources = nullptr) {
  SolverState s;
  s.u = std::move(u);
  s.p = std::move(p);
  prime_derivatives(s, params, BoundaryData::zero(), sources);
  return s;
}

}  // namespace

TEST_CASE("two-point flux on the two-cell box") {
  Mesh mesh = uniform_box_mesh({1, 1, 1}, {2, 1, 1});
  MeshFunction w(mesh, {0.0, 1.0});
  // cell 0: interior face contributes -tau (w_1 - w_0) = -2, boundary faces vanish
  CHECK(cell_flux(w, {}, 0) == doctest::Approx(-2.0));
  // cell 1: +2 from the interior face, +4 from the x=1 face, +1 from each lateral
  CHECK(cell_flux(w, {}, 1) == doctest::Approx(10.0));

  std::vector<double> flux;
  cell_flux_all(w, {}, flux);
  CHECK(flux[0] == doctest::Approx(cell_flux(w, {}, 0)));
  CHECK(flux[1] == doctest::Approx(cell_flux(w, {}, 1)));
}

TEST_CASE("boundary flux with constant value and zero data") {
  Mesh mesh = uniform_box_mesh({1, 1, 1}, {1, 1, 1});
  MeshFunction w(mesh, std::vector<double>{0.7});
  // six faces, tau 2 each: F = 6 * 2 * 0.7
  CHECK(cell_flux(w, {}, 0) == doctest::Approx(8.4));
  // nonzero boundary data enters with the opposite sign
  double bv = 0.2;
  CHECK(cell_flux(w, [bv](const Vec3&) { return bv; }, 0) == doctest::Approx(12.0 * (0.7 - 0.2)));
}

TEST_CASE("constant field has zero flux through interior cells") {
  Mesh mesh = uniform_box_mesh({1, 1, 1}, {3, 3, 3});
  MeshFunction w(mesh, std::vector<double>(27, 0.37));
  int center = 13;  // (1,1,1)
  for (int f : mesh.cell_faces(center)) CHECK_FALSE(mesh.faces[f].boundary());
  CHECK(cell_flux(w, {}, center) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("flux properties on random meshes") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    Mesh mesh = random_graded_box(rng);
    MeshFunction w = random_function(rng, mesh);
    MeshFunction v = random_function(rng, mesh);

    // discrete divergence theorem: everything interior cancels
    std::vector<double> flux;
    cell_flux_all(w, {}, flux);
    double total = 0.0;
    for (double f : flux) total += f;
    double boundary = 0.0;
    for (const Face& f : mesh.faces)
      if (f.boundary()) boundary += f.tau * w[f.owner];
    CHECK(total == doctest::Approx(boundary).epsilon(1e-10));

    // per-face antisymmetry
    for (const Face& f : mesh.faces) {
      if (f.boundary()) continue;
      double fk = -f.tau * (w[f.neighbor] - w[f.owner]);
      double fl = -f.tau * (w[f.owner] - w[f.neighbor]);
      CHECK(fk + fl == 0.0);
    }

    // linearity in the field for homogeneous data
    std::vector<double> fw, fv, fmix;
    cell_flux_all(w, {}, fw);
    cell_flux_all(v, {}, fv);
    MeshFunction mix(mesh);
    for (int c = 0; c < mesh.n_cells(); ++c) mix[c] = 2.0 * w[c] - 3.0 * v[c];
    cell_flux_all(mix, {}, fmix);
    for (int c = 0; c < mesh.n_cells(); ++c)
      CHECK(fmix[c] == doctest::Approx(2.0 * fw[c] - 3.0 * fv[c]).epsilon(1e-11));
  }
}

TEST_CASE("zero state is a fixed point") {
  Mesh mesh = uniform_box_mesh({1, 1, 1}, {3, 3, 3});
  ModelParams params;  // 0 sits inside the limiter identity interval
  SolverState s = make_state(MeshFunction(mesh), MeshFunction(mesh), params);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CHECK(s.udot[c] == 0.0);
    CHECK(s.pdot[c] == 0.0);
  }
  SolverState next = advance(s, 1e-3, Integrator::Rk4, params, BoundaryData::zero());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CHECK(next.u[c] == 0.0);
    CHECK(next.p[c] == 0.0);
  }
}

TEST_CASE("single-cell right-hand side matches the hand computation") {
  Mesh mesh = uniform_box_mesh({1, 1, 1}, {1, 1, 1});
  ModelParams params;
  params.latent_heat = 2.0;
  params.relax = 3.0;
  params.beta = 5.0;
  params.b = 0.5;
  params.xi = 0.1;
  MeshFunction u(mesh, std::vector<double>{0.3});
  MeshFunction p(mesh, std::vector<double>{0.4});
  SolverState s = make_state(u, p, params);
  // f0(0.4) = -0.024; coupling -(0.5*5/0.1)*0.3 = -7.5; flux/vol = 12*0.4 = 4.8
  CHECK(s.pdot[0] == doctest::Approx((-2.4 - 7.5 - 4.8) / 3.0).epsilon(1e-13));
  CHECK(s.udot[0] == doctest::Approx(2.0 * s.pdot[0] - 12.0 * 0.3).epsilon(1e-13));

  SUBCASE("flipping the coupling sign flips that term only") {
    ModelParams flipped = params;
    flipped.coupling_sign = 1;
    SolverState s2 = make_state(u, p, flipped);
    CHECK(s2.pdot[0] == doctest::Approx((-2.4 + 7.5 - 4.8) / 3.0).epsilon(1e-13));
  }
}

TEST_CASE("right-hand side is autonomous without forcing") {
  std::mt19937_64 rng(19);
  Mesh mesh = uniform_box_mesh({1, 1, 1}, {4, 4, 4});
  ModelParams params;
  SolverState a;
  a.t = 0.0;
  a.u = random_function(rng, mesh);
  a.p = random_function(rng, mesh, 0.0, 1.0);
  SolverState b = a;
  b.t = 17.5;
  prime_derivatives(a, params, BoundaryData::zero());
  prime_derivatives(b, params, BoundaryData::zero());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CHECK(a.udot[c] == b.udot[c]);
    CHECK(a.pdot[c] == b.pdot[c]);
  }
}

TEST_CASE("forced right-hand side matches a direct summation oracle") {
  std::mt19937_64 rng(67);
  Mesh mesh = random_graded_box(rng);
  ModelParams params;
  params.xi = 0.2;
  SourceTerms sources;
  sources.u = [](const Vec3& x, double t) { return std::sin(x.x + 2.0 * t) + x.y; };
  sources.p = [](const Vec3& x, double t) { return std::cos(x.z - t) * x.x; };

  SolverState s;
  s.t = 0.37;
  s.u = random_function(rng, mesh);
  s.p = random_function(rng, mesh, -0.2, 1.2);
  prime_derivatives(s, params, BoundaryData::zero(), &sources);

  for (int c = 0; c < mesh.n_cells(); ++c) {
    double flux_u = 0.0, flux_p = 0.0;
    for (int f : mesh.cell_faces(c)) {
      const Face& face = mesh.faces[f];
      if (face.boundary()) {
        flux_u += face.tau * s.u[c];
        flux_p += face.tau * s.p[c];
      } else {
        int other = face.owner == c ? face.neighbor : face.owner;
        flux_u += -face.tau * (s.u[other] - s.u[c]);
        flux_p += -face.tau * (s.p[other] - s.p[c]);
      }
    }
    const Vec3& x = mesh.cells[c].point;
    double vol = mesh.cells[c].volume;
    double pd = (reaction_cubic(s.p[c]) / (params.xi * params.xi) -
                 params.b * params.beta / params.xi * limiter(s.u[c], params.knots) -
                 flux_p / vol + sources.p(x, s.t)) /
                params.relax;
    double ud = params.latent_heat * pd - flux_u / vol + sources.u(x, s.t);
    CHECK(s.pdot[c] == doctest::Approx(pd).epsilon(1e-12));
    CHECK(s.udot[c] == doctest::Approx(ud).epsilon(1e-12));
  }
}

TEST_CASE("stable step heuristic") {
  ModelParams params;
  SUBCASE("safety factor bounds") {
    Mesh mesh = uniform_box_mesh({1, 1, 1}, {2, 2, 2});
    CHECK_THROWS_AS(stable_dt(mesh, params, 0.0), InputError);
    CHECK_THROWS_AS(stable_dt(mesh, params, 1.5), InputError);
  }
  SUBCASE("diffusion term scales with the squared spacing") {
    Mesh coarse = uniform_box_mesh({1, 1, 1}, {4, 4, 4});
    Mesh fine = uniform_box_mesh({1, 1, 1}, {8, 8, 8});
    double rate_coarse = 0.5 / stable_dt(coarse, params, 0.5);
    double rate_fine = 0.5 / stable_dt(fine, params, 0.5);
    // corner cells dominate: three boundary faces at tau = 2h plus three
    // interior ones at tau = h give 9/h^2, so halving h adds 9*(64-16)
    CHECK(rate_fine - rate_coarse == doctest::Approx(9.0 * (64.0 - 16.0)).epsilon(1e-12));
  }
}

TEST_CASE("explicit Euler step matches the closed-form update") {
  Mesh mesh = uniform_box_mesh({1, 1, 1}, {1, 1, 1});
  ModelParams params;
  params.xi = 0.25;
  MeshFunction u(mesh, std::vector<double>{-0.5});
  MeshFunction p(mesh, std::vector<double>{0.25});
  SolverState s = make_state(u, p, params);
  double dt = 1e-3;
  SolverState next = advance(s, dt, Integrator::ExplicitEuler, params, BoundaryData::zero());
  CHECK(next.u[0] == doctest::Approx(-0.5 + dt * s.udot[0]).epsilon(1e-15));
  CHECK(next.p[0] == doctest::Approx(0.25 + dt * s.pdot[0]).epsilon(1e-15));
  CHECK(next.t == doctest::Approx(dt));
  CHECK(next.derivatives_cached);
}

TEST_CASE("rk4 reaches fourth-order temporal accuracy") {
  Mesh mesh = uniform_box_mesh({1, 1, 1}, {1, 1, 1});
  ModelParams params;
  params.xi = 0.5;
  auto solve = [&](double dt, double T) {
    SolverState s = make_state(MeshFunction(mesh, std::vector<double>{-0.4}),
                               MeshFunction(mesh, std::vector<double>{0.3}), params);
    int n = static_cast<int>(std::round(T / dt));
    for (int i = 0; i < n; ++i) s = advance(s, dt, Integrator::Rk4, params, BoundaryData::zero());
    return s.p[0];
  };
  double reference = solve(0.0005, 0.16);
  double err_coarse = std::abs(solve(0.04, 0.16) - reference);
  double err_fine = std::abs(solve(0.02, 0.16) - reference);
  double ratio = err_coarse / err_fine;
  CHECK(ratio > 10.0);
  CHECK(ratio < 24.0);
}

TEST_CASE("explicit Euler is stable at the heuristic step and blows up at four times it") {
  Mesh mesh = uniform_box_mesh({1, 1, 1}, {8, 8, 8});
  ModelParams params;
  params.xi = 0.2;  // reaction mild enough that diffusion sets the limit
  auto initial_p = [&](const Vec3& x) {
    return 0.5 * (1.0 - std::tanh((distance(x, {0.5, 0.5, 0.5}) - 0.25) /
                                  (2.0 * std::sqrt(2.0) * params.xi)));
  };
  auto initial_u = [&](const Vec3& x) {
    return -std::sin(3.14159265358979 * x.x) * std::sin(3.14159265358979 * x.y) *
           std::sin(3.14159265358979 * x.z);
  };
  double dt = stable_dt(mesh, params, 0.5);
  int horizon = static_cast<int>(10.0 / dt);

  SUBCASE("finite over the whole horizon at the stable step") {
    SolverState s = make_state(project(mesh, initial_u), project(mesh, initial_p), params);
    for (int i = 0; i < horizon; ++i)
      s = advance(s, dt, Integrator::ExplicitEuler, params, BoundaryData::zero());
    for (int c = 0; c < mesh.n_cells(); ++c) {
      CHECK(std::isfinite(s.u[c]));
      CHECK(std::abs(s.p[c]) < 10.0);
    }
  }
  SUBCASE("diverges within the horizon at four times the step") {
    SolverState s = make_state(project(mesh, initial_u), project(mesh, initial_p), params);
    bool blew_up = false;
    try {
      for (int i = 0; i < horizon; ++i)
        s = advance(s, 4.0 * dt, Integrator::ExplicitEuler, params, BoundaryData::zero());
      for (int c = 0; c < mesh.n_cells() && !blew_up; ++c)
        blew_up = std::abs(s.p[c]) > 1e6;
    } catch (const BlowupError&) {
      blew_up = true;
    }
    CHECK(blew_up);
  }
}

TEST_CASE("blowup raises with the offending cell") {
  Mesh mesh = uniform_box_mesh({1, 1, 1}, {2, 2, 2});
  ModelParams params;
  MeshFunction u(mesh, std::vector<double>(8, 1e200));
  MeshFunction p(mesh, std::vector<double>(8, 1e200));
  SolverState s;
  s.u = u;
  s.p = p;
  CHECK_THROWS_AS(
      {
        prime_derivatives(s, params, BoundaryData::zero());
        SolverState next = advance(s, 1e300, Integrator::ExplicitEuler, params, BoundaryData::zero());
        (void)next;
      },
      BlowupError);
}
