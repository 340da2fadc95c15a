#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <set>

#include "mjpl/io.hpp"
#include "mjpl/sim.hpp"

using namespace mjpl;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

// Returns the true coefficients, so delta0 = 0 and delta1 = 1.
FitResult perfect(const GeneratedSample& s) {
  FitResult r;
  r.theta.resize(s.beta.size() + 1);
  r.theta << s.beta0, s.beta;
  r.converged = true;
  r.status = FitStatus::converged;
  r.iterations = 1;
  return r;
}

// Estimates are 1.5 * truth + 0.25.
FitResult inflated(const GeneratedSample& s) {
  FitResult r = perfect(s);
  r.theta.tail(s.beta.size()) = (1.5 * s.beta).array() + 0.25;
  return r;
}

std::string csv(const std::vector<ReplicationRecord>& records) {
  std::ostringstream out;
  write_records(out, records);
  return out.str();
}

}  // namespace

TEST_CASE("covariate count") {
  CHECK(covariate_count(2000, 0.22) == 440);
  CHECK(covariate_count(1000, 0.05) == 50);
  CHECK(covariate_count(2000, 0.01) == 20);
  CHECK(covariate_count(2000, 0.55) == 1100);
  CHECK(covariate_count(10, 0.15) == 2);
  CHECK(covariate_count(500, 0.001) == 1);
}

TEST_CASE("initial coefficient configurations") {
  CHECK(make_beta_star(BetaConfig::s1, 5) == vec({-10, -5, 0, 5, 10}));
  CHECK(make_beta_star(BetaConfig::s2, 10) == vec({-10, -10, 10, 10, 0, 0, 0, 0, 0, 0}));
  CHECK(make_beta_star(BetaConfig::u1, 7) == vec({-3, -3, -1, -1, 0, 1, 1}));
  CHECK(make_beta_star(BetaConfig::u2, 4) == vec({1, 4, 7, 10}));
  CHECK(make_beta_star(BetaConfig::train_grid, 3) == vec({1, 5.5, 10}));
  CHECK(make_beta_star(BetaConfig::train_grid, 1) == vec({1}));
  CHECK_THROWS_AS(make_beta_star(BetaConfig::s1, 0), Error);

  CHECK(parse_beta_config("u2") == BetaConfig::u2);
  CHECK(to_string(parse_beta_config("train-grid")) == "train-grid");
  try {
    parse_beta_config("s3");
    FAIL("accepted an unknown configuration");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unknown_config);
  }
}

TEST_CASE("AR(1) covariance") {
  const Matrix s = ar1_covariance(3, 0.5);
  CHECK(s(0, 2) == doctest::Approx(0.25));
  CHECK(s(1, 1) == 1.0);
  CHECK(ar1_covariance(4, 0.0) == Matrix::Identity(4, 4));
}

TEST_CASE("intercept and signal split") {
  SimConfig cfg;
  cfg.gamma = 10.0;
  cfg.rho2 = 0.36;
  CHECK(cfg.beta0() == doctest::Approx(6.0));
  CHECK(cfg.gamma0() == doctest::Approx(8.0));
}

TEST_CASE("signal control") {
  for (double psi : {0.0, 0.3, 0.9}) {
    for (auto config : {BetaConfig::s1, BetaConfig::u1, BetaConfig::train_grid}) {
      SimConfig cfg;
      cfg.n = 200;
      cfg.kappa = 0.1;
      cfg.gamma = 5.0;
      cfg.rho2 = 0.2;
      cfg.psi = psi;
      cfg.beta_config = config;
      const auto s = generate_dataset(cfg);
      CHECK(s.realized_signal == doctest::Approx(cfg.gamma0() * cfg.gamma0()).epsilon(1e-9));
      CHECK(s.beta0 == doctest::Approx(cfg.beta0()));
      CHECK(s.data.x.cols() == 20);
      CHECK(s.data.has_intercept);
    }
  }
}

TEST_CASE("identity covariance rescales by the plain norm") {
  SimConfig cfg;
  cfg.n = 50;
  cfg.kappa = 0.1;
  cfg.gamma = 3.0;
  cfg.beta_config = BetaConfig::s1;
  const auto s = generate_dataset(cfg);
  const Vector star = make_beta_star(BetaConfig::s1, 5);
  CHECK((s.beta - 3.0 * star / star.norm()).norm() < 1e-12);
}

TEST_CASE("sample variance of the linear predictor") {
  SimConfig cfg;
  cfg.n = 100000;
  cfg.kappa = 1e-4;  // p = 10
  cfg.gamma = 2.0;
  cfg.psi = 0.6;
  cfg.beta_config = BetaConfig::s1;
  const auto s = generate_dataset(cfg);
  const Vector eta = s.data.x * s.beta;
  const double mean = eta.mean();
  const double var = (eta.array() - mean).square().sum() / (cfg.n - 1);
  // var of a sample variance of normals: 2 sigma^4 / (n - 1)
  const double se = std::sqrt(2.0 / (cfg.n - 1)) * 4.0;
  CHECK(std::abs(var - 4.0) < 3.0 * se);
}

TEST_CASE("response rate follows the intercept") {
  SimConfig cfg;
  cfg.n = 20000;
  cfg.kappa = 1e-4;
  cfg.gamma = 2.0;
  cfg.rho2 = 1.0;  // all intercept
  const auto s = generate_dataset(cfg);
  const double expected = 1.0 / (1.0 + std::exp(-2.0));
  CHECK(std::abs(s.data.y.mean() - expected) < 4.0 * std::sqrt(expected * (1 - expected) / cfg.n));
}

TEST_CASE("datasets are reproducible and streams differ") {
  SimConfig cfg;
  cfg.n = 100;
  cfg.kappa = 0.1;
  cfg.gamma = 4.0;
  const auto a = generate_dataset(cfg);
  const auto b = generate_dataset(cfg);
  CHECK(a.data.x == b.data.x);
  CHECK(a.data.y == b.data.y);
  cfg.replicate = 1;
  CHECK(generate_dataset(cfg).data.x != a.data.x);
  cfg.replicate = 0;
  cfg.point_id = 1;
  CHECK(generate_dataset(cfg).data.x != a.data.x);
}

TEST_CASE("other covariate families") {
  SimConfig cfg;
  cfg.n = 400;
  cfg.kappa = 0.05;
  cfg.gamma = 3.0;
  cfg.family = CovariateFamily::bernoulli;
  const auto b = generate_dataset(cfg);
  CHECK(((b.data.x.array() == 0.0) || (b.data.x.array() == 1.0)).all());
  CHECK(b.realized_signal == doctest::Approx(9.0).epsilon(1e-9));

  cfg.family = CovariateFamily::normal_scaled;
  cfg.has_intercept = false;
  cfg.beta_config = BetaConfig::s1;
  const auto s = generate_dataset(cfg);
  CHECK(s.data.design().cols() == 20);
  CHECK(s.beta.squaredNorm() / 20.0 == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(s.beta0 == 0.0);
}

TEST_CASE("config validation") {
  SimConfig cfg;
  cfg.kappa = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SimConfig{};
  cfg.psi = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SimConfig{};
  cfg.rho2 = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("replication with a perfect stub fitter") {
  SimConfig cfg;
  cfg.n = 300;
  cfg.kappa = 0.05;
  cfg.gamma = 2.0;
  ReplicationOptions opt;
  opt.fitter = perfect;
  const auto rec = run_replication(cfg, opt);
  CHECK(*rec.delta0 == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(*rec.delta1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rec.exists);
  CHECK(rec.q == 1.0);
  CHECK(*rec.agg_bias == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(*rec.agg_mse == doctest::Approx(0.0).scale(1.0).epsilon(1e-20));
  CHECK_FALSE(rec.seconds.has_value());
  CHECK(rec.p == 15);

  opt.fitter = inflated;
  const auto r2 = run_replication(cfg, opt);
  CHECK(*r2.delta1 == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(*r2.delta0 == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("constant truth: slope regression is flagged, bias kept") {
  SimConfig cfg;
  cfg.n = 100;
  cfg.kappa = 0.01;  // p = 1, so the truth vector is constant
  cfg.gamma = 2.0;
  ReplicationOptions opt;
  opt.fitter = perfect;
  const auto rec = run_replication(cfg, opt);
  CHECK_FALSE(rec.delta1.has_value());
  CHECK(rec.status.find("DegenerateDesign") != std::string::npos);
  CHECK(rec.agg_bias.has_value());
}

TEST_CASE("non-existence region applies q") {
  SimConfig cfg;
  cfg.n = 200;
  cfg.kappa = 0.4;
  cfg.gamma = 8.0;
  ReplicationOptions opt;
  opt.fitter = perfect;
  const auto rec = run_replication(cfg, opt);
  CHECK_FALSE(rec.exists);
  CHECK(rec.q == doctest::Approx(q_factor(0.4, 8.0, 8.0, RescaleCoefficients{}, false)));
  // estimates divided by q: bias = mean(beta) * (1/q - 1)
  // (checked only for sign here; the exact identity is in test_analysis)
  CHECK(rec.agg_bias.has_value());
}

TEST_CASE("real fit in the existence region is near unbiased") {
  SimConfig cfg;
  cfg.n = 1000;
  cfg.kappa = 0.02;
  cfg.gamma = 1.0;
  const auto rec = run_replication(cfg, {});
  CHECK(rec.status == "Converged");
  CHECK(rec.iterations > 0);
  CHECK(std::abs(*rec.delta1 - 1.0) < 0.3);
}

TEST_CASE("ML estimator only where the estimate exists") {
  SimConfig cfg;
  cfg.n = 400;
  cfg.kappa = 0.5;
  cfg.gamma = 10.0;
  ReplicationOptions opt;
  opt.estimator = Estimator::ml;
  const auto rec = run_replication(cfg, opt);
  CHECK_FALSE(rec.exists);
  CHECK_FALSE(rec.delta1.has_value());
  CHECK(rec.status.find("not attempted") != std::string::npos);
}

TEST_CASE("space-filling design") {
  const auto d = space_filling_design(100, 7);
  REQUIRE(d.size() == 100);
  std::set<std::pair<double, double>> seen;
  for (const auto& p : d) {
    CHECK(p.kappa > 0.0);
    CHECK(p.kappa < 0.6);
    CHECK(p.gamma > 0.0);
    CHECK(p.gamma < 20.0);
    CHECK(p.rho2 > 0.0);
    CHECK(p.rho2 < 1.0);
    seen.insert({p.kappa, p.gamma});
  }
  CHECK(seen.size() == 100);
  const auto again = space_filling_design(100, 7);
  CHECK(again.front().kappa == d.front().kappa);
  CHECK(space_filling_design(100, 8).front().kappa != d.front().kappa);

  // low discrepancy: every tenth of the kappa range holds about ten points
  for (int b = 0; b < 10; ++b) {
    const auto count = std::count_if(d.begin(), d.end(), [&](const DesignPoint& p) {
      return p.kappa >= 0.06 * b && p.kappa < 0.06 * (b + 1);
    });
    CHECK(count >= 8);
    CHECK(count <= 12);
  }
}

TEST_CASE("test-phase grid") {
  const auto pts = test_points();
  REQUIRE(pts.size() == 30);
  CHECK(pts[0].kappa == 0.01);
  CHECK(pts[0].gamma == 1.0);
  CHECK(pts[29].kappa == 0.55);
  CHECK(pts[29].gamma == 18.5);
}

TEST_CASE("training experiment with stub fitters") {
  std::vector<DesignPoint> design{{0.05, 2.0, 0.0}, {0.3, 6.0, 0.5}};
  TrainingOptions opt;
  opt.n = 200;
  opt.reps = 3;
  opt.replication.fitter = inflated;
  const auto res = run_training_experiment(design, opt);
  REQUIRE(res.records.size() == 6);
  REQUIRE(res.summary.size() == 2);
  CHECK(*res.summary[0].mean_delta1 == doctest::Approx(1.5));
  CHECK(res.summary[0].reps_used == 3);
  CHECK(res.records[4].point_id == 1);
  CHECK(res.records[4].replicate == 1);

  // two replicates with different slopes average
  int calls = 0;
  opt.reps = 2;
  opt.replication.fitter = [&](const GeneratedSample& s) {
    FitResult r = perfect(s);
    if (s.data.y.size() > 0 && calls++ % 2 == 1) r.theta.tail(s.beta.size()) *= 3.0;
    return r;
  };
  const auto mixed = run_training_experiment(std::span(design).first(1), opt);
  CHECK(*mixed.summary[0].mean_delta1 == doctest::Approx(2.0));
}

TEST_CASE("experiments are deterministic and independent of worker count") {
  std::vector<DesignPoint> design{{0.05, 2.0, 0.0}, {0.1, 4.0, 0.3}, {0.02, 1.0, 0.1}};
  TrainingOptions opt;
  opt.n = 200;
  opt.reps = 2;
  const auto serial = run_training_experiment(design, opt);
  opt.workers = 3;
  const auto parallel = run_training_experiment(design, opt);
  CHECK(csv(serial.records) == csv(parallel.records));
  CHECK(csv(serial.records) == csv(run_training_experiment(design, opt).records));
}

TEST_CASE("test experiment layout") {
  TestGrid grid;
  grid.ns = {200};
  grid.psis = {0.0, 0.3};
  grid.rho2s = {0.0};
  grid.configs = {BetaConfig::s1};
  TestOptions opt;
  opt.replication.fitter = perfect;
  const auto res = run_test_experiment(grid, opt);
  CHECK(res.records.size() == 60);
  CHECK(res.r2.size() == 2);
  std::set<std::uint64_t> ids;
  for (const auto& r : res.records) ids.insert(r.point_id);
  CHECK(ids.size() == 60);
  CHECK(res.records[31].psi == 0.3);
  CHECK(res.records[31].kappa == test_points()[1].kappa);
}

TEST_CASE("aMSE experiment") {
  const std::vector<double> kappas{0.05, 0.2};
  const std::vector<double> gammas{1.0};
  AmseOptions opt;
  opt.n = 200;
  opt.reps = 2;
  const auto a = run_amse_experiment(kappas, gammas, opt);
  REQUIRE(a.summary.size() == 2);
  CHECK(a.summary[1].p == 40);
  CHECK(a.summary[0].mean_amse.has_value());
  CHECK(csv(a.records) == csv(run_amse_experiment(kappas, gammas, opt).records));
}

TEST_CASE("power-law points keep non-existence rows only") {
  std::vector<TrainingSummary> rows(3);
  rows[0].exists = true;
  rows[0].mean_delta1 = 1.0;
  rows[1].exists = false;
  rows[1].point = {0.3, 10.0, 0.2};
  rows[1].gamma0 = 9.0;
  rows[1].mean_delta1 = 0.2;
  rows[2] = rows[1];
  rows[2].point.rho2 = 0.9;
  const auto pts = power_law_points(rows);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].delta1 == 0.2);
  CHECK(pts[0].gamma0 == 9.0);
}
