#include <doctest.h>

#include <cmath>

#include "pfvm/errors.hpp"
#include "pfvm/model.hpp"
#include "test_util.hpp"

using namespace pfvm;

TEST_CASE("reaction cubic and double well roots") {
  CHECK(reaction_cubic(0.0) == 0.0);
  CHECK(reaction_cubic(0.5) == 0.0);
  CHECK(reaction_cubic(1.0) == 0.0);
  CHECK(double_well(0.0) == 0.0);
  CHECK(double_well(1.0) == 0.0);
  CHECK(double_well(0.5) == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
}

TEST_CASE("double well is the antiderivative of the negated cubic") {
  for (double x : {-1.5, -0.3, 0.2, 0.6, 1.1, 2.7}) {
    double h = 1e-6;
    double slope = (double_well(x + h) - double_well(x - h)) / (2.0 * h);
    CHECK(slope == doctest::Approx(-reaction_cubic(x)).epsilon(1e-6));
  }
}

TEST_CASE("limiter") {
  LimiterKnots knots;  // (-4, -2, 2, 4)
  SUBCASE("identity inside the knot interval") {
    for (double x : {-2.0, -0.7, 0.0, 1.3, 2.0}) CHECK(limiter(x, knots) == x);
  }
  SUBCASE("one-sided derivatives at the junction both equal one") {
    double h = 1e-7;
    double left = (limiter(knots.h1, knots) - limiter(knots.h1 - h, knots)) / h;
    double right = (limiter(knots.h1 + h, knots) - limiter(knots.h1, knots)) / h;
    CHECK(left == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(right == doctest::Approx(1.0).epsilon(1e-6));
    double left0 = (limiter(knots.h0, knots) - limiter(knots.h0 - h, knots)) / h;
    CHECK(left0 == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("bounded by the outer knots over a wide grid") {
    ModelParams params;
    double bound = params.limiter_bound();
    CHECK(bound == 4.0);
    double sup = 0.0;
    for (int i = 0; i < 1000000; ++i) {
      double x = -500.0 + i * 0.001;
      sup = std::max(sup, std::abs(limiter(x, knots)));
    }
    CHECK(sup < bound);
  }
  SUBCASE("asymmetric knots saturate toward their own bounds") {
    LimiterKnots asym{-1.0, -0.5, 3.0, 6.0};
    CHECK(limiter(1e9, asym) == doctest::Approx(6.0).epsilon(1e-6));
    CHECK(limiter(-1e9, asym) == doctest::Approx(-1.0).epsilon(1e-6));
  }
}

TEST_CASE("double well constant") {
  SUBCASE("value matches the golden-section oracle") {
    auto difference = [](double x) { return double_well(x) - x * x; };
    double xmin = pfvm::testing::golden_min(difference, 0.0, 3.0, 1e-7);
    double oracle = -difference(xmin);
    CHECK(double_well_constant() == doctest::Approx(oracle).epsilon(1e-7));
    CHECK(double_well_constant() == doctest::Approx(3.098207557310585).epsilon(1e-9));
  }
  SUBCASE("factored identity for the quartic difference") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> val(-5.0, 5.0);
    for (int i = 0; i < 100; ++i) {
      double x = val(rng);
      double lhs = double_well(x) - x * x;
      double rhs = 0.25 * x * x * (x + 1.0) * (x - 3.0);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
  SUBCASE("shifted well dominates the square on a fine grid") {
    double cw = double_well_constant();
    for (int i = 0; i <= 200000; ++i) {
      double x = -10.0 + i * 1e-4;
      CHECK(double_well(x) + cw - x * x >= -1e-12);
    }
  }
}

TEST_CASE("parameter validation") {
  ModelParams params;
  CHECK_NOTHROW(params.validate());
  SUBCASE("limiter ordering errors name the keys") {
    params.knots.h0 = 3.0;
    params.knots.h1 = 2.0;
    try {
      params.validate();
      FAIL("expected an error");
    } catch (const InputError& e) {
      std::string what = e.what();
      CHECK(what.find("H0") != std::string::npos);
    }
  }
  SUBCASE("positivity") {
    params.xi = 0.0;
    CHECK_THROWS_AS(params.validate(), InputError);
  }
  SUBCASE("sign flag") {
    params.coupling_sign = 0;
    CHECK_THROWS_AS(params.validate(), InputError);
  }
}

TEST_CASE("reaction terms bundle") {
  ModelParams params;
  ReactionTerms t = reaction_terms(0.4, 0.3, params);
  CHECK(t.cubic == doctest::Approx(reaction_cubic(0.3)));
  CHECK(t.well == doctest::Approx(double_well(0.3)));
  CHECK(t.limited == doctest::Approx(0.4));  // g = u inside the identity interval
}
