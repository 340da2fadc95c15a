#include <doctest.h>

#include <cmath>

#include "mjpl/error.hpp"
#include "mjpl/phase.hpp"

using namespace mjpl;

// Reference values: scipy adaptive quadrature + Nelder-Mead
// (tests/oracles/reference_values.py).
TEST_CASE("phase objective at a fixed (t0, t1)") {
  CHECK(phase_objective(0.3, -0.8, 0.5, 2.0) == doctest::Approx(0.425071024287).epsilon(1e-10));
}

TEST_CASE("threshold matches the reference minimization") {
  struct Ref {
    double beta0, gamma0, h;
  };
  const Ref refs[] = {{0, 0.5, 0.481612}, {3, 0.5, 0.164607}, {0, 2, 0.344930},  {3, 2, 0.200516},
                      {0, 5, 0.185052},   {3, 5, 0.159206},   {0, 10, 0.098959}, {3, 10, 0.094815},
                      {0, 20, 0.050430},  {3, 20, 0.049873},  {1, 1, 0.393944}};
  for (const auto& r : refs) {
    INFO("beta0=" << r.beta0 << " gamma0=" << r.gamma0);
    CHECK(std::abs(h_mle(r.beta0, r.gamma0) - r.h) < 2e-6);
  }
}

TEST_CASE("threshold limits and shape") {
  CHECK(std::abs(h_mle(0.0, 1e-3) - 0.5) < 0.01);
  CHECK(h_mle(0.0, 5.0) < h_mle(0.0, 1.0));
  for (double g0 : {0.3, 2.0, 7.0}) {
    CHECK(h_mle(1.5, g0) == doctest::Approx(h_mle(-1.5, g0)).epsilon(1e-8));
    CHECK(h_mle(0.0, g0) > 0.0);
    CHECK(h_mle(0.0, g0) <= 0.5 + 1e-9);
  }
  double previous = 1.0;
  for (double g0 : {0.1, 1.0, 3.0, 6.0, 12.0}) {
    const double h = h_mle(0.0, g0);
    CHECK(h < previous);
    previous = h;
  }
}

TEST_CASE("more panel nodes do not move the threshold") {
  HmleOptions fine;
  fine.panel_nodes = 48;
  for (double g0 : {0.5, 8.0, 18.0}) CHECK(std::abs(h_mle(0.7, g0) - h_mle(0.7, g0, fine)) < 1e-7);
}

TEST_CASE("existence verdicts") {
  CHECK_FALSE(mle_exists_asymptotically({0.6, 0.0, 1.0}).exists_asymptotically);
  CHECK(mle_exists_asymptotically({0.01, 0.0, 1.0}).exists_asymptotically);

  // tie goes to "not exists"
  const double h = h_mle(0.0, 2.0);
  const auto tie = mle_exists_asymptotically({h, 0.0, 2.0});
  CHECK(tie.h_value == h);
  CHECK_FALSE(tie.exists_asymptotically);
  CHECK(tie.method == PhaseMethod::analytic);
}

TEST_CASE("phase point helpers") {
  const auto p = PhasePoint::from_rho2(0.2, 5.0, 0.36);
  CHECK(p.beta0 == doctest::Approx(3.0));
  CHECK(p.gamma0 == doctest::Approx(4.0));
  CHECK(p.gamma() * p.gamma() == doctest::Approx(p.beta0 * p.beta0 + p.gamma0 * p.gamma0).epsilon(1e-12));
  CHECK_THROWS_AS(PhasePoint::from_rho2(0.2, 5.0, 1.5), Error);
  CHECK_THROWS_AS(mle_exists_asymptotically({1.2, 0.0, 1.0}), Error);
  CHECK_THROWS_AS(h_mle(0.0, -1.0), Error);
}

TEST_CASE("Monte-Carlo boundary preconditions") {
  McBoundaryOptions small;
  small.n = 100;
  CHECK_THROWS_AS(mc_phase_boundary(0.0, 1.0, small), Error);
}

TEST_CASE("separated fraction far above the boundary") {
  CHECK(separated_fraction(0.55, 0.0, 5.0, 500, 20, 3) == 1.0);
  CHECK(separated_fraction(0.02, 0.0, 1.0, 500, 20, 3) == 0.0);
}
