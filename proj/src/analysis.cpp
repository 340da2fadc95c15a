#include "mjpl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mjpl/rng.hpp"

namespace mjpl {

double q_factor(double kappa, double gamma, double gamma0, const RescaleCoefficients& b, bool exists) {
  if (!(kappa > 0.0) || !(gamma > 0.0) || !(gamma0 > 0.0)) {
    throw Error(Errc::non_positive_input, "q_factor: kappa, gamma and gamma0 must be positive");
  }
  if (exists) return 1.0;
  return std::exp(b.b1 * std::log(kappa) + b.b2 * std::log(gamma) + b.b3 * std::log(gamma0));
}

Vector rescale_estimates(const Vector& estimates, double q) {
  if (!(q > 0.0) || !std::isfinite(q)) throw Error(Errc::non_positive_scale, "rescale_estimates: q must be positive");
  return estimates / q;
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(Errc::length_mismatch, "estimates and truth must have equal, non-zero length");
  }
}

}  // namespace

double aggregate_bias(std::span<const double> estimates, std::span<const double> truth) {
  check_pair(estimates, truth);
  double total = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) total += estimates[j] - truth[j];
  return total / static_cast<double>(truth.size());
}

double aggregate_mse(std::span<const double> estimates, std::span<const double> truth) {
  check_pair(estimates, truth);
  double total = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const double e = estimates[j] - truth[j];
    total += e * e;
  }
  return total / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Power law

Matrix power_law_design(std::span<const PowerLawPoint> points) {
  Matrix design(static_cast<Eigen::Index>(points.size()), 4);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    if (!(pt.kappa > 0.0) || !(pt.gamma > 0.0) || !(pt.gamma0 > 0.0)) {
      throw Error(Errc::non_positive_input, "power law: kappa, gamma, gamma0 must be positive");
    }
    const auto r = static_cast<Eigen::Index>(i);
    design(r, 0) = 1.0;
    design(r, 1) = std::log(pt.kappa);
    design(r, 2) = std::log(pt.gamma);
    design(r, 3) = std::log(pt.gamma0);
  }
  return design;
}

PowerLawFit fit_power_law(std::span<const PowerLawPoint> points) {
  if (points.size() < 5) throw Error(Errc::invalid_argument, "fit_power_law: need at least 5 points");
  const Matrix design = power_law_design(points);
  Vector delta1(design.rows());
  for (std::size_t i = 0; i < points.size(); ++i) delta1[static_cast<Eigen::Index>(i)] = points[i].delta1;

  const GammaFit gamma = fit_gamma_log(design, delta1);
  PowerLawFit out;
  out.points = points.size();
  out.gamma_glm = {gamma.coefficients[0], gamma.coefficients[1], gamma.coefficients[2], gamma.coefficients[3],
                   gamma.dispersion};
  out.deviance_explained = gamma.deviance_explained;

  const Vector log_delta1 = delta1.array().log().matrix();
  const Vector ols = least_squares(design, log_delta1);
  out.log_linear = {ols[0], ols[1], ols[2], ols[3], 0.0};
  const Vector residual = log_delta1 - design * ols;
  const double tss = (log_delta1.array() - log_delta1.mean()).square().sum();
  out.log_linear_r2 = tss > 0.0 ? 1.0 - residual.squaredNorm() / tss : 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Bootstrap

namespace {

double interpolated_quantile(const std::vector<double>& sorted, double prob) {
  prob = std::clamp(prob, 0.0, 1.0);
  const double h = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(Errc::invalid_argument, "confidence level must be in (0, 1)");
}

}  // namespace

BcaInterval bca_from_replicates(double estimate, std::vector<double> replicates, double z0, double acceleration,
                                double level) {
  check_level(level);
  if (replicates.empty()) throw Error(Errc::degenerate_bootstrap, "no bootstrap replicates");
  std::sort(replicates.begin(), replicates.end());
  const double alpha = 1.0 - level;
  auto adjusted = [&](double tail) {
    const double z = normal_quantile(tail);
    return normal_cdf(z0 + (z0 + z) / (1.0 - acceleration * (z0 + z)));
  };
  BcaInterval out;
  out.estimate = estimate;
  out.level = level;
  out.resamples = static_cast<int>(replicates.size());
  out.bias_correction = z0;
  out.acceleration = acceleration;
  out.lower = interpolated_quantile(replicates, adjusted(alpha / 2.0));
  out.upper = interpolated_quantile(replicates, adjusted(1.0 - alpha / 2.0));
  return out;
}

BcaInterval percentile_interval(double estimate, std::vector<double> replicates, double level) {
  check_level(level);
  if (replicates.empty()) throw Error(Errc::degenerate_bootstrap, "no bootstrap replicates");
  std::sort(replicates.begin(), replicates.end());
  const double alpha = 1.0 - level;
  BcaInterval out;
  out.estimate = estimate;
  out.level = level;
  out.resamples = static_cast<int>(replicates.size());
  out.lower = interpolated_quantile(replicates, alpha / 2.0);
  out.upper = interpolated_quantile(replicates, 1.0 - alpha / 2.0);
  return out;
}

std::vector<BcaInterval> bootstrap_bca(std::size_t n_cases, const CaseStatistic& statistic, int resamples,
                                       double level, std::uint64_t seed) {
  check_level(level);
  if (resamples < 999) throw Error(Errc::invalid_argument, "bootstrap_bca: need at least 999 resamples");
  if (n_cases < 2) throw Error(Errc::invalid_argument, "bootstrap_bca: need at least 2 cases");

  std::vector<std::size_t> all(n_cases);
  std::iota(all.begin(), all.end(), 0);
  const Vector estimate = statistic(all);
  const auto k = static_cast<std::size_t>(estimate.size());

  std::vector<std::vector<double>> replicates(k);
  Rng rng(seed);
  std::vector<std::size_t> cases(n_cases);
  for (int b = 0; b < resamples; ++b) {
    for (auto& c : cases) c = static_cast<std::size_t>(rng.below(n_cases));
    Vector value;
    try {
      value = statistic(cases);
    } catch (const Error&) {
      continue;
    }
    if (!value.allFinite()) continue;
    for (std::size_t j = 0; j < k; ++j) replicates[j].push_back(value[static_cast<Eigen::Index>(j)]);
  }
  if (replicates.empty() || replicates[0].size() * 2 < static_cast<std::size_t>(resamples)) {
    throw Error(Errc::degenerate_bootstrap, "bootstrap_bca: most resamples failed");
  }

  // Jackknife for the acceleration.
  std::vector<Vector> jackknife;
  jackknife.reserve(n_cases);
  std::vector<std::size_t> without(n_cases - 1);
  for (std::size_t i = 0; i < n_cases; ++i) {
    std::size_t pos = 0;
    for (std::size_t c = 0; c < n_cases; ++c) {
      if (c != i) without[pos++] = c;
    }
    jackknife.push_back(statistic(without));
  }

  std::vector<BcaInterval> out;
  for (std::size_t j = 0; j < k; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const auto& reps = replicates[j];
    const auto [lo, hi] = std::minmax_element(reps.begin(), reps.end());
    if (*lo == *hi) throw Error(Errc::degenerate_bootstrap, "bootstrap_bca: all replicates equal");

    double below = 0.0;
    for (double r : reps) below += r < estimate[jj] ? 1.0 : (r == estimate[jj] ? 0.5 : 0.0);
    const double share = std::clamp(below / static_cast<double>(reps.size()), 0.5 / static_cast<double>(reps.size()),
                                    1.0 - 0.5 / static_cast<double>(reps.size()));
    const double z0 = normal_quantile(share);

    double mean = 0.0;
    for (const auto& v : jackknife) mean += v[jj];
    mean /= static_cast<double>(n_cases);
    double num = 0.0;
    double den = 0.0;
    for (const auto& v : jackknife) {
      const double d = mean - v[jj];
      num += d * d * d;
      den += d * d;
    }
    const double accel = den > 0.0 ? num / (6.0 * std::pow(den, 1.5)) : 0.0;
    out.push_back(bca_from_replicates(estimate[jj], reps, z0, accel, level));
  }
  return out;
}

double r2_test(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.size() != predicted.size()) throw Error(Errc::length_mismatch, "r2_test: lengths differ");
  if (observed.size() < 2) throw Error(Errc::degenerate_observations, "r2_test: need at least 2 observations");
  const double mean = std::accumulate(observed.begin(), observed.end(), 0.0) / static_cast<double>(observed.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    ss_tot += (observed[i] - mean) * (observed[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw Error(Errc::degenerate_observations, "r2_test: observations have no variance");
  return 1.0 - ss_res / ss_tot;
}

}  // namespace mjpl
