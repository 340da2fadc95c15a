#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mjpl/analysis.hpp"
#include "mjpl/rng.hpp"

using namespace mjpl;

TEST_CASE("q factor") {
  const RescaleCoefficients b;
  CHECK(q_factor(0.3, 8.0, 8.0, b, true) == 1.0);
  const double q = q_factor(0.3, 8.0, 8.0, b, false);
  CHECK(q == doctest::Approx(std::pow(0.3, -1.172) * std::pow(8.0, -1.869) * std::pow(8.0, 0.817)).epsilon(1e-14));
  // b0 plays no part
  RescaleCoefficients shifted = b;
  shifted.b0 = 5.0;
  CHECK(q_factor(0.3, 8.0, 8.0, shifted, false) == q);
  CHECK_THROWS_AS(q_factor(0.0, 8.0, 8.0, b, false), Error);
  CHECK_THROWS_AS(q_factor(0.3, 8.0, 0.0, b, true), Error);
}

TEST_CASE("rescaling and aggregates") {
  Vector est(3);
  est << 1.0, 2.0, 3.0;
  CHECK(rescale_estimates(est, 1.0) == est);
  CHECK(rescale_estimates(est, 2.0)[2] == 1.5);
  CHECK_THROWS_AS(rescale_estimates(est, 0.0), Error);

  const std::vector<double> e{1.0, 2.0, 3.0};
  const std::vector<double> t{1.5, 2.0, 2.0};
  CHECK(aggregate_bias(e, t) == doctest::Approx(0.5 / 3.0));
  CHECK(aggregate_mse(e, t) == doctest::Approx(1.25 / 3.0));
  const std::vector<double> shorter{1.0};
  CHECK_THROWS_AS(aggregate_bias(e, shorter), Error);
}

TEST_CASE("power law recovers exact exponents") {
  std::vector<PowerLawPoint> pts;
  Rng rng(4);
  for (int i = 0; i < 12; ++i) {
    const double kappa = 0.05 + 0.5 * rng.uniform();
    const double gamma = 1.0 + 19.0 * rng.uniform();
    const double gamma0 = gamma * (0.3 + 0.7 * rng.uniform());
    const double d1 = std::exp(-0.033) * std::pow(kappa, -1.172) * std::pow(gamma, -1.869) * std::pow(gamma0, 0.817);
    pts.push_back({kappa, gamma, gamma0, d1});
  }
  const auto fit = fit_power_law(pts);
  CHECK(fit.gamma_glm.b0 == doctest::Approx(-0.033).epsilon(1e-8));
  CHECK(fit.gamma_glm.b1 == doctest::Approx(-1.172).epsilon(1e-8));
  CHECK(fit.gamma_glm.b2 == doctest::Approx(-1.869).epsilon(1e-8));
  CHECK(fit.gamma_glm.b3 == doctest::Approx(0.817).epsilon(1e-8));
  CHECK(fit.log_linear.b1 == doctest::Approx(-1.172).epsilon(1e-8));
  CHECK(fit.deviance_explained == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.points == 12);
  CHECK_THROWS_AS(fit_power_law(std::span(pts).first(4)), Error);
}

TEST_CASE("BCa endpoints on a fixed replicate set") {
  // reference: numpy type-7 quantiles at the adjusted probabilities
  const std::vector<double> reps{0.9, 1.4, 0.2, 2.2, 1.1, 0.7, 1.9, 1.3, 0.5, 1.6, 1.0, 0.8};
  const auto ci = bca_from_replicates(1.0, reps, 0.15, 0.05, 0.9);
  CHECK(ci.lower == doctest::Approx(0.5361092190).epsilon(1e-9));
  CHECK(ci.upper == doctest::Approx(2.1441412702).epsilon(1e-9));

  // without correction BCa is the percentile interval
  const auto plain = bca_from_replicates(1.0, reps, 0.0, 0.0, 0.9);
  const auto pct = percentile_interval(1.0, reps, 0.9);
  CHECK(plain.lower == doctest::Approx(pct.lower));
  CHECK(plain.upper == doctest::Approx(pct.upper));
}

TEST_CASE("bootstrap BCa for a mean covers like a t interval") {
  Rng rng(11);
  std::vector<double> xs(60);
  for (auto& x : xs) x = 2.0 + rng.normal();
  const CaseStatistic mean = [&](std::span<const std::size_t> idx) {
    double s = 0.0;
    for (auto i : idx) s += xs[i];
    Vector v(1);
    v[0] = s / static_cast<double>(idx.size());
    return v;
  };
  const auto ci = bootstrap_bca(xs.size(), mean, 2000, 0.95, 5);
  REQUIRE(ci.size() == 1);
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / 60.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double se = std::sqrt(ss / 59.0 / 60.0);
  CHECK(ci[0].estimate == doctest::Approx(m));
  CHECK(std::abs(ci[0].lower - (m - 1.96 * se)) < 0.4 * se);
  CHECK(std::abs(ci[0].upper - (m + 1.96 * se)) < 0.4 * se);
  CHECK(ci[0].resamples == 2000);
  CHECK(std::abs(ci[0].acceleration) < 0.05);

  // reproducible
  const auto again = bootstrap_bca(xs.size(), mean, 2000, 0.95, 5);
  CHECK(again[0].lower == ci[0].lower);
}

TEST_CASE("bootstrap failure modes") {
  const CaseStatistic constant = [](std::span<const std::size_t>) { return Vector::Ones(1); };
  CHECK_THROWS_AS(bootstrap_bca(10, constant, 999, 0.95, 1), Error);
  CHECK_THROWS_AS(bootstrap_bca(10, constant, 100, 0.95, 1), Error);

  int calls = 0;
  const CaseStatistic flaky = [&](std::span<const std::size_t> idx) {
    if (++calls > 1 && calls % 3 != 0) throw Error(Errc::singular_information, "boom");
    Vector v(1);
    v[0] = static_cast<double>(idx[0]);
    return v;
  };
  try {
    bootstrap_bca(10, flaky, 999, 0.95, 1);
    FAIL("expected DegenerateBootstrap");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_bootstrap);
  }
}

TEST_CASE("out-of-sample R^2") {
  const std::vector<double> obs{1.0, 2.0, 3.0};
  CHECK(r2_test(obs, obs) == 1.0);
  const std::vector<double> means{2.0, 2.0, 2.0};
  CHECK(r2_test(obs, means) == 0.0);
  const std::vector<double> bad{3.0, 2.0, 1.0};
  CHECK(r2_test(obs, bad) == doctest::Approx(-3.0));
  CHECK_THROWS_AS(r2_test(means, obs), Error);
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(r2_test(one, one), Error);
}
