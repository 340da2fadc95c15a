#pragma once

// Data-generating process and experiment orchestration.
//
// One data set: p = ceil(n kappa) covariates, beta0 = gamma rho and
// gamma0 = gamma sqrt(1 - rho^2) with rho = +sqrt(rho2), an initial vector
// beta* rescaled so that var(x^T beta) = gamma0^2, and y_i ~ Bernoulli(mu_i)
// with logit(mu_i) = beta0 + x_i^T beta.
//
// Random draws for (seed, point_id, replicate) come from one stream (see
// rng.hpp) in a fixed order: the n x p covariates row by row, then one
// uniform per response.

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mjpl/analysis.hpp"
#include "mjpl/glm.hpp"
#include "mjpl/phase.hpp"

namespace mjpl {

enum class BetaConfig { train_grid, s1, s2, u1, u2 };

std::string to_string(BetaConfig config);
/// Accepts "train-grid", "s1", "s2", "u1", "u2"; otherwise Errc::unknown_config.
BetaConfig parse_beta_config(std::string_view name);

enum class CovariateFamily {
  normal_ar1,     // N_p(0, Sigma), Sigma_ij = psi^|i-j|
  bernoulli,      // independent Bernoulli(lambda) entries
  normal_scaled,  // independent N(0, 1/p) entries, beta scaled so |beta|^2/p = gamma0^2
};

std::string to_string(CovariateFamily family);
CovariateFamily parse_covariate_family(std::string_view name);

struct SimConfig {
  int n = 2000;
  double kappa = 0.1;
  double gamma = 1.0;
  double rho2 = 0.0;
  double psi = 0.0;
  BetaConfig beta_config = BetaConfig::train_grid;
  CovariateFamily family = CovariateFamily::normal_ar1;
  double lambda = 0.1;  // Bernoulli success probability
  bool has_intercept = true;
  std::uint64_t seed = 1;
  std::uint64_t point_id = 0;
  std::uint64_t replicate = 0;

  int p() const;
  /// Zero without an intercept.
  double beta0() const;
  /// Equals gamma without an intercept.
  double gamma0() const;
  /// Throws Errc::invalid_argument describing the first violated constraint.
  void validate() const;
};

/// ceil(n kappa), treating products within 1e-9 of an integer as that integer.
int covariate_count(int n, double kappa);

/// The initial coefficient vector for a configuration.
Vector make_beta_star(BetaConfig config, int p);

/// Sigma_ij = psi^|i-j|.
Matrix ar1_covariance(int p, double psi);

struct GeneratedSample {
  LogisticData data;
  Vector beta;  // covariate coefficients after rescaling
  double beta0 = 0.0;
  double realized_signal = 0.0;  // var(x^T beta) implied by the covariate law
};

GeneratedSample generate_dataset(const SimConfig& cfg);

// ---------------------------------------------------------------------------
// Replications

struct ReplicationRecord {
  std::uint64_t point_id = 0;
  double kappa = 0.0;
  double gamma = 0.0;
  double rho2 = 0.0;
  double psi = 0.0;
  int n = 0;
  int p = 0;
  BetaConfig config = BetaConfig::train_grid;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  bool exists = false;
  std::optional<bool> separated;
  std::optional<double> delta0;
  std::optional<double> delta1;
  std::optional<double> agg_bias;  // of the q-rescaled estimates
  std::optional<double> agg_mse;
  int iterations = 0;
  std::optional<double> seconds;
  double q = 1.0;
  std::string status;  // fit status, or the error that stopped the record
};

/// Maps a generated sample to coefficient estimates (intercept first when
/// the data carry one).
using Fitter = std::function<FitResult(const GeneratedSample&)>;

enum class Estimator { mjpl, ml };

struct ReplicationOptions {
  RescaleCoefficients b{};
  GlmControl control{};
  Estimator estimator = Estimator::mjpl;
  /// Run the separation program on every sample (always done for the
  /// Bernoulli family, where it decides existence).
  bool detect_separation = false;
  bool record_timing = false;
  HmleOptions phase{};
  /// Replaces the built-in fitter when set.
  Fitter fitter{};
  /// Skips the phase computation when the caller already knows the verdict.
  std::optional<bool> exists_override;
};

/// Generates one sample, fits it, regresses estimates on truth for
/// (delta0, delta1), and computes aggregate bias/MSE of estimates / q.
/// Fit and regression failures are recorded in `status`, never thrown.
ReplicationRecord run_replication(const SimConfig& cfg, const ReplicationOptions& options);

/// Asymptotic existence for a configuration (normal families only).
ExistenceVerdict config_existence(const SimConfig& cfg, const HmleOptions& phase = {});

// ---------------------------------------------------------------------------
// Work queue with deterministic output order.

template <class Fn>
auto parallel_map(std::size_t count, int workers, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<std::optional<Result>> slots(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || count <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<Result> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

struct DesignPoint {
  double kappa = 0.0;
  double gamma = 0.0;
  double rho2 = 0.0;
};

/// Space-filling design over (0, 0.6) x (0, 20) x (0, 1): the Halton sequence
/// in bases 2, 3, 5 (indices 1..count) with a Cranley-Patterson random shift
/// drawn from stream (seed, 0, 0).
std::vector<DesignPoint> space_filling_design(int count, std::uint64_t seed);

struct GridPoint {
  double kappa = 0.0;
  double gamma = 0.0;
};

/// The 30 (kappa, gamma) points of the test phase.
std::span<const GridPoint> test_points();

struct TrainingOptions {
  int n = 2000;
  int reps = 100;
  std::uint64_t seed = 1;
  int workers = 1;
  double psi = 0.0;
  BetaConfig beta_config = BetaConfig::train_grid;
  ReplicationOptions replication{};
};

struct TrainingSummary {
  std::uint64_t point_id = 0;
  DesignPoint point;
  double beta0 = 0.0;
  double gamma0 = 0.0;
  bool exists = false;
  double h = 0.0;
  int n = 0;
  int p = 0;
  int reps_used = 0;
  std::optional<double> mean_delta0;
  std::optional<double> mean_delta1;
  std::optional<double> sd_delta1;
};

struct TrainingResult {
  std::vector<ReplicationRecord> records;
  std::vector<TrainingSummary> summary;
};

TrainingResult run_training_experiment(std::span<const DesignPoint> design, const TrainingOptions& options);

/// Summary rows eligible for the power-law fit: not existing, rho2 <= cutoff,
/// positive mean delta1.
std::vector<PowerLawPoint> power_law_points(std::span<const TrainingSummary> summary, double rho2_cutoff = 0.7);

struct TestGrid {
  std::vector<int> ns{1000, 2000, 3000};
  std::vector<double> psis{0.0, 0.3, 0.6, 0.9};
  std::vector<double> rho2s{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<BetaConfig> configs{BetaConfig::s1, BetaConfig::s2, BetaConfig::u1, BetaConfig::u2};
  std::vector<GridPoint> points;  // empty means test_points()
};

struct TestOptions {
  std::uint64_t seed = 1;
  int workers = 1;
  ReplicationOptions replication{};
};

struct R2Summary {
  int n = 0;
  double psi = 0.0;
  double rho2 = 0.0;
  BetaConfig config = BetaConfig::s1;
  std::size_t points_used = 0;
  std::optional<double> r2;
};

struct TestResult {
  std::vector<ReplicationRecord> records;
  std::vector<R2Summary> r2;
};

/// One replicate per (n, psi, rho2, config, point). Record point ids are
/// combination_index * |points| + point_index, combinations ordered with n
/// outermost, then psi, rho2, config.
TestResult run_test_experiment(const TestGrid& grid, const TestOptions& options);

struct AmseOptions {
  int n = 2000;
  int reps = 50;
  std::uint64_t seed = 1;
  int workers = 1;
  ReplicationOptions replication{};
};

struct AmseSummary {
  double kappa = 0.0;
  double gamma = 0.0;
  int p = 0;
  bool exists = false;
  double q = 1.0;
  int reps_used = 0;
  std::optional<double> mean_amse;
  std::optional<double> se_amse;
  std::optional<double> mean_bias;
  std::optional<double> min_bias;
  std::optional<double> max_bias;
};

struct AmseResult {
  std::vector<ReplicationRecord> records;
  std::vector<AmseSummary> summary;
};

/// No-intercept experiment: N(0, 1/p) covariates, s1 coefficients scaled to
/// |beta|^2 / p = gamma^2, mJPL estimates divided by q(kappa, gamma, gamma).
AmseResult run_amse_experiment(std::span<const double> kappas, std::span<const double> gammas,
                               const AmseOptions& options);

}  // namespace mjpl
