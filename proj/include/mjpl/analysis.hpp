#pragma once

// Aggregate-bias arithmetic: the scaling factor q, rescaled estimates, the
// power-law fit of the slope summaries, bootstrap BCa intervals and the
// out-of-sample R^2.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mjpl/glm.hpp"

namespace mjpl {

/// Exponents of E(delta1) = exp(b0) kappa^b1 gamma^b2 gamma0^b3 plus the
/// Gamma dispersion. Defaults are the published training-phase estimates.
struct RescaleCoefficients {
  double b0 = -0.033;
  double b1 = -1.172;
  double b2 = -1.869;
  double b3 = 0.817;
  double phi = 0.004;
};

/// 1 when the ML estimate exists, kappa^b1 gamma^b2 gamma0^b3 otherwise.
/// b0 is not used. Throws Errc::non_positive_input unless all of kappa,
/// gamma, gamma0 are positive.
double q_factor(double kappa, double gamma, double gamma0, const RescaleCoefficients& b, bool exists);

/// estimates / q. Throws Errc::non_positive_scale for q <= 0.
Vector rescale_estimates(const Vector& estimates, double q);

/// mean(estimates - truth); Errc::length_mismatch on unequal or empty input.
double aggregate_bias(std::span<const double> estimates, std::span<const double> truth);
/// mean((estimates - truth)^2).
double aggregate_mse(std::span<const double> estimates, std::span<const double> truth);

struct PowerLawPoint {
  double kappa = 0.0;
  double gamma = 0.0;
  double gamma0 = 0.0;
  double delta1 = 0.0;
};

struct PowerLawFit {
  RescaleCoefficients gamma_glm;  // Gamma/log-link maximum likelihood
  double deviance_explained = 0.0;
  RescaleCoefficients log_linear;  // OLS of log delta1, phi unused
  double log_linear_r2 = 0.0;
  std::size_t points = 0;
};

/// Design matrix (1, log kappa, log gamma, log gamma0).
Matrix power_law_design(std::span<const PowerLawPoint> points);

/// Requires at least 5 points with positive delta1.
PowerLawFit fit_power_law(std::span<const PowerLawPoint> points);

struct BcaInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  int resamples = 0;
  double bias_correction = 0.0;  // z0
  double acceleration = 0.0;     // a
};

/// Statistic evaluated on a multiset of case indices.
using CaseStatistic = std::function<Vector(std::span<const std::size_t>)>;

/// BCa endpoints from bootstrap replicates of one scalar statistic, with the
/// given bias correction and acceleration. The quantile rule is linear
/// interpolation between order statistics.
BcaInterval bca_from_replicates(double estimate, std::vector<double> replicates, double z0, double acceleration,
                                double level);

/// Percentile interval from the same replicates.
BcaInterval percentile_interval(double estimate, std::vector<double> replicates, double level);

/// Case-resampling bootstrap with BCa intervals for every component of the
/// statistic. z0 comes from the share of replicates below the estimate (ties
/// count half) and the acceleration from jackknife skewness. Resamples where
/// the statistic throws are dropped; `resamples` reports how many were kept.
/// Throws Errc::degenerate_bootstrap when all replicates of a component are
/// equal.
std::vector<BcaInterval> bootstrap_bca(std::size_t n_cases, const CaseStatistic& statistic, int resamples,
                                       double level, std::uint64_t seed);

/// 1 - sum (obs - pred)^2 / sum (obs - mean obs)^2.
double r2_test(std::span<const double> observed, std::span<const double> predicted);

}  // namespace mjpl
