#include <doctest.h>

#include <cmath>

#include "instances.hpp"
#include "mjpl/glm.hpp"

using namespace mjpl;

namespace {

GlmControl tight() {
  GlmControl c;
  c.tol = 1e-10;
  c.max_iter = 1000;
  return c;
}

LogisticData intercept_only(int n, int successes) {
  Vector y = Vector::Zero(n);
  y.head(successes).setOnes();
  return LogisticData::make(y, Matrix(n, 0), true);
}

LogisticData overlap_data() {
  Matrix x(10, 2);
  x << -1.2, 0.5, -0.7, -1.1, -0.3, 0.8, 0.1, -0.2, 0.4, 1.4, 0.9, -0.6, 1.3, 0.3, -0.5, 0.0, 0.6, -0.9, 0.2, 1.0;
  Vector y(10);
  y << 0, 1, 0, 0, 1, 1, 1, 1, 0, 0;
  return LogisticData::make(y, x, true);
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

}  // namespace

TEST_CASE("intercept-only closed forms") {
  const auto data = intercept_only(10, 3);
  const auto mjpl = fit_mjpl(data, tight());
  CHECK(mjpl.converged);
  CHECK(mjpl.theta[0] == doctest::Approx(std::log(3.5 / 7.5)).epsilon(1e-9));
  const auto ml = fit_ml(data, tight());
  CHECK(ml.converged);
  CHECK(ml.theta[0] == doctest::Approx(std::log(3.0 / 7.0)).epsilon(1e-9));

  // default tolerance still lands within it of the answer
  CHECK(std::abs(fit_mjpl(data).theta[0] - std::log(3.5 / 7.5)) < 1e-3);
}

TEST_CASE("all-zero responses: ML diverges, mJPL stays finite") {
  const auto data = intercept_only(10, 0);
  const auto ml = fit_ml(data);
  CHECK_FALSE(ml.converged);
  CHECK(ml.status == FitStatus::diverging);
  const auto mjpl = fit_mjpl(data, tight());
  CHECK(mjpl.converged);
  CHECK(mjpl.theta[0] == doctest::Approx(std::log(0.5 / 10.5)).epsilon(1e-9));
}

TEST_CASE("two separated points") {
  Matrix x(2, 1);
  x << -1, 1;
  Vector y(2);
  y << 0, 1;
  const auto data = LogisticData::make(y, x, true);

  const auto ml = fit_ml(data);
  CHECK_FALSE(ml.converged);
  CHECK(ml.status == FitStatus::diverging);

  const auto mjpl = fit_mjpl(data, tight());
  CHECK(mjpl.converged);
  CHECK(mjpl.theta.allFinite());
  // reference: direct Nelder-Mead maximization of the penalized likelihood
  CHECK(mjpl.theta[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  CHECK(mjpl.theta[1] == doctest::Approx(1.0986122796).epsilon(1e-6));
  CHECK(std::abs(fit_mjpl(data).theta[1] - 1.0986122796) < 1e-3);
}

TEST_CASE("overlapping data match reference fits") {
  const auto data = overlap_data();
  const auto ml = fit_ml(data, tight());
  REQUIRE(ml.converged);
  const Vector ml_ref = vec({-0.0150968122, 0.8087278901, -0.3933192919});
  CHECK((ml.theta - ml_ref).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(ml_score(ml.theta, data).cwiseAbs().maxCoeff() < 1e-8);

  const auto mjpl = fit_mjpl(data, tight());
  REQUIRE(mjpl.converged);
  const Vector mjpl_ref = vec({-0.0113894195, 0.5797217164, -0.2963192226});
  CHECK((mjpl.theta - mjpl_ref).cwiseAbs().maxCoeff() < 1e-6);

  // mJPL shrinks toward zero
  CHECK(mjpl.theta.tail(2).norm() < ml.theta.tail(2).norm());
}

TEST_CASE("penalized score matches central differences") {
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto data = instances::gradient_instance(k);
    const Vector theta = instances::random_theta(data, k);
    const Vector g = penalized_score(theta, data);
    constexpr double h = 1e-6;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      Vector up = theta;
      Vector down = theta;
      up[j] += h;
      down[j] -= h;
      const double fd = (penalized_log_likelihood(up, data) - penalized_log_likelihood(down, data)) / (2 * h);
      CHECK(std::abs(fd - g[j]) <= 1e-5 * std::max(1.0, std::abs(g[j])));
    }
  }
}

TEST_CASE("score vanishes at the fitted optimum") {
  const auto data = overlap_data();
  const auto fit = fit_mjpl(data);
  CHECK(fit.converged);
  CHECK(fit.score_norm <= 1e-3);
  CHECK(fit.score_norm == doctest::Approx(penalized_score(fit.theta, data).cwiseAbs().maxCoeff()));
}

TEST_CASE("objective never decreases along accepted steps") {
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto fit = fit_mjpl(instances::gradient_instance(k), tight());
    for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
      CHECK(fit.objective_trace[i] >= fit.objective_trace[i - 1] - 1e-12);
    }
  }
}

TEST_CASE("rescaling a covariate rescales its coefficient") {
  const auto data = overlap_data();
  Matrix scaled = data.x;
  scaled.col(1) *= 4.0;
  const auto a = fit_mjpl(data, tight());
  const auto b = fit_mjpl(LogisticData::make(data.y, scaled, true), tight());
  CHECK(b.theta[0] == doctest::Approx(a.theta[0]).epsilon(1e-7));
  CHECK(b.theta[1] == doctest::Approx(a.theta[1]).epsilon(1e-7));
  CHECK(b.theta[2] == doctest::Approx(a.theta[2] / 4.0).epsilon(1e-7));
}

TEST_CASE("label flip negates the mJPL estimate") {
  const auto data = overlap_data();
  const Vector flipped = Vector::Ones(data.n()) - data.y;
  const auto a = fit_mjpl(data, tight());
  const auto b = fit_mjpl(LogisticData::make(flipped, data.x, true), tight());
  CHECK((a.theta + b.theta).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("input validation") {
  Matrix x(3, 1);
  x << 1, 2, 3;
  CHECK_THROWS_AS(LogisticData::make(vec({0, 1, 2}), x, true), Error);
  CHECK_THROWS_AS(LogisticData::make(vec({0, 1}), x, true), Error);
  x(1, 0) = std::nan("");
  CHECK_THROWS_AS(LogisticData::make(vec({0, 1, 1}), x, true), Error);

  GlmControl bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(fit_mjpl(overlap_data(), bad), Error);
}

TEST_CASE("gamma log-link GLM matches the reference fit") {
  const Vector kappa = vec({0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.15, 0.35, 0.25, 0.45});
  const Vector gamma = vec({2.0, 5.0, 8.0, 11.0, 14.0, 17.0, 3.0, 9.0, 12.0, 6.0});
  const Vector gamma0 = vec({1.9, 4.0, 7.5, 9.0, 10.0, 16.0, 2.9, 8.0, 11.5, 5.5});
  const Vector delta1 = vec({0.62, 0.21, 0.18, 0.05, 0.09, 0.02, 0.55, 0.07, 0.04, 0.12});
  Matrix design(10, 4);
  design.col(0).setOnes();
  design.col(1) = kappa.array().log().matrix();
  design.col(2) = gamma.array().log().matrix();
  design.col(3) = gamma0.array().log().matrix();

  const auto fit = fit_gamma_log(design, delta1);
  CHECK(fit.converged);
  const Vector ref = vec({0.6823098276, -0.0382576568, 0.4653386963, -2.0246302026});
  CHECK((fit.coefficients - ref).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(fit.dispersion == doctest::Approx(0.2487090991).epsilon(1e-7));
  CHECK(fit.deviance == doctest::Approx(1.2205444299).epsilon(1e-7));
  CHECK(fit.null_deviance == doctest::Approx(10.6357241190).epsilon(1e-7));
  CHECK(fit.deviance_explained == doctest::Approx(1.0 - 1.2205444299 / 10.6357241190).epsilon(1e-7));
}

TEST_CASE("gamma GLM recovers an exact power law") {
  Matrix design(6, 2);
  Vector y(6);
  for (int i = 0; i < 6; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::log(1.0 + i);
    y[i] = std::exp(0.4) * std::pow(1.0 + i, -1.3);
  }
  const auto fit = fit_gamma_log(design, y);
  CHECK(fit.coefficients[0] == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(fit.coefficients[1] == doctest::Approx(-1.3).epsilon(1e-9));
  CHECK(fit.deviance_explained == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(fit_gamma_log(design, -y), Error);
}

TEST_CASE("ML running out of iterations without separation is not diverging") {
  const auto data = intercept_only(10, 3);
  const auto ml = fit_ml(data, {.tol = 1e-12, .max_iter = 2});
  CHECK(ml.status == FitStatus::max_iterations);
}
