#include "mjpl/sim.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <map>

#include "mjpl/rng.hpp"
#include "mjpl/separation.hpp"

namespace mjpl {

std::string to_string(BetaConfig config) {
  switch (config) {
    case BetaConfig::train_grid: return "train-grid";
    case BetaConfig::s1: return "s1";
    case BetaConfig::s2: return "s2";
    case BetaConfig::u1: return "u1";
    case BetaConfig::u2: return "u2";
  }
  return "unknown";
}

BetaConfig parse_beta_config(std::string_view name) {
  if (name == "train-grid") return BetaConfig::train_grid;
  if (name == "s1") return BetaConfig::s1;
  if (name == "s2") return BetaConfig::s2;
  if (name == "u1") return BetaConfig::u1;
  if (name == "u2") return BetaConfig::u2;
  throw Error(Errc::unknown_config, "unknown beta* configuration '" + std::string(name) + "'");
}

std::string to_string(CovariateFamily family) {
  switch (family) {
    case CovariateFamily::normal_ar1: return "normal-ar1";
    case CovariateFamily::bernoulli: return "bernoulli";
    case CovariateFamily::normal_scaled: return "normal-scaled";
  }
  return "unknown";
}

CovariateFamily parse_covariate_family(std::string_view name) {
  if (name == "normal-ar1") return CovariateFamily::normal_ar1;
  if (name == "bernoulli") return CovariateFamily::bernoulli;
  if (name == "normal-scaled") return CovariateFamily::normal_scaled;
  throw Error(Errc::unknown_config, "unknown covariate family '" + std::string(name) + "'");
}

int covariate_count(int n, double kappa) {
  const double product = static_cast<double>(n) * kappa;
  const double nearest = std::round(product);
  const double value = std::abs(product - nearest) <= 1e-9 * std::max(1.0, product) ? nearest : std::ceil(product);
  return std::max(1, static_cast<int>(value));
}

int SimConfig::p() const { return covariate_count(n, kappa); }

double SimConfig::beta0() const { return has_intercept ? gamma * std::sqrt(rho2) : 0.0; }

double SimConfig::gamma0() const { return has_intercept ? gamma * std::sqrt(1.0 - rho2) : gamma; }

void SimConfig::validate() const {
  if (n < 1) throw Error(Errc::invalid_argument, "SimConfig: n must be >= 1");
  if (!(kappa > 0.0 && kappa < 1.0)) throw Error(Errc::invalid_argument, "SimConfig: kappa must lie in (0, 1)");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error(Errc::invalid_argument, "SimConfig: gamma must be >= 0");
  if (!(rho2 >= 0.0 && rho2 <= 1.0)) throw Error(Errc::invalid_argument, "SimConfig: rho2 must lie in [0, 1]");
  if (!(psi > -1.0 && psi < 1.0)) throw Error(Errc::invalid_argument, "SimConfig: psi must lie in (-1, 1)");
  if (family == CovariateFamily::bernoulli && !(lambda > 0.0 && lambda < 1.0)) {
    throw Error(Errc::invalid_argument, "SimConfig: lambda must lie in (0, 1)");
  }
  if (!has_intercept && rho2 != 0.0) {
    throw Error(Errc::invalid_argument, "SimConfig: rho2 must be 0 without an intercept");
  }
}

namespace {

Vector linspace(double from, double to, int p) {
  Vector out(p);
  if (p == 1) {
    out[0] = from;
    return out;
  }
  for (int j = 0; j < p; ++j) out[j] = from + (to - from) * j / (p - 1);
  return out;
}

}  // namespace

Vector make_beta_star(BetaConfig config, int p) {
  if (p < 1) throw Error(Errc::invalid_argument, "make_beta_star: p must be >= 1");
  const int block = (p + 4) / 5;  // ceil(p / 5)
  Vector out = Vector::Zero(p);
  switch (config) {
    case BetaConfig::train_grid:
    case BetaConfig::u2:
      return linspace(1.0, 10.0, p);
    case BetaConfig::s1:
      return linspace(-10.0, 10.0, p);
    case BetaConfig::s2:
      for (int j = 0; j < std::min(block, p); ++j) out[j] = -10.0;
      for (int j = block; j < std::min(2 * block, p); ++j) out[j] = 10.0;
      return out;
    case BetaConfig::u1:
      // Blocks are written in order; for tiny p the last block wins.
      for (int j = 0; j < std::min(block, p); ++j) out[j] = -3.0;
      for (int j = block; j < std::min(2 * block, p); ++j) out[j] = -1.0;
      for (int j = std::max(0, p - block); j < p; ++j) out[j] = 1.0;
      return out;
  }
  throw Error(Errc::unknown_config, "make_beta_star: unknown configuration");
}

Matrix ar1_covariance(int p, double psi) {
  Matrix sigma(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(psi, std::abs(i - j));
  }
  return sigma;
}

GeneratedSample generate_dataset(const SimConfig& cfg) {
  cfg.validate();
  const int n = cfg.n;
  const int p = cfg.p();
  const Vector beta_star = make_beta_star(cfg.beta_config, p);
  const double gamma0 = cfg.gamma0();
  Rng rng(cfg.seed, cfg.point_id, cfg.replicate);

  // Cholesky factor of the AR(1) covariance (identity when psi = 0).
  Matrix chol;
  const bool identity = cfg.psi == 0.0 || cfg.family == CovariateFamily::normal_scaled;
  if (!identity) chol = cholesky(ar1_covariance(p, cfg.psi)).matrix();
  const double lt_norm = identity ? beta_star.norm() : (chol.transpose() * beta_star).norm();

  Matrix x(n, p);
  GeneratedSample sample;
  switch (cfg.family) {
    case CovariateFamily::normal_ar1: {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
      }
      if (!identity) x = x * chol.transpose();
      sample.beta = gamma0 * beta_star / lt_norm;
      sample.realized_signal = identity ? sample.beta.squaredNorm() : (chol.transpose() * sample.beta).squaredNorm();
      break;
    }
    case CovariateFamily::bernoulli: {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.bernoulli(cfg.lambda) ? 1.0 : 0.0;
      }
      const double spread = std::sqrt(cfg.lambda * (1.0 - cfg.lambda));
      sample.beta = gamma0 * beta_star / (spread * lt_norm);
      sample.realized_signal = spread * spread * sample.beta.squaredNorm();
      break;
    }
    case CovariateFamily::normal_scaled: {
      const double sd = 1.0 / std::sqrt(static_cast<double>(p));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = sd * rng.normal();
      }
      sample.beta = gamma0 * std::sqrt(static_cast<double>(p)) * beta_star / beta_star.norm();
      sample.realized_signal = sample.beta.squaredNorm() / p;
      break;
    }
  }
  sample.beta0 = cfg.beta0();

  const Vector eta = (x * sample.beta).array() + sample.beta0;
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    const double mu = 1.0 / (1.0 + std::exp(-eta[i]));
    y[i] = rng.uniform() < mu ? 1.0 : 0.0;
  }
  sample.data = LogisticData::make(std::move(y), std::move(x), cfg.has_intercept);
  return sample;
}

// ---------------------------------------------------------------------------

ExistenceVerdict config_existence(const SimConfig& cfg, const HmleOptions& phase) {
  return mle_exists_asymptotically(PhasePoint{cfg.kappa, cfg.beta0(), cfg.gamma0()}, PhaseMethod::analytic, phase);
}

ReplicationRecord run_replication(const SimConfig& cfg, const ReplicationOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  ReplicationRecord rec;
  rec.point_id = cfg.point_id;
  rec.kappa = cfg.kappa;
  rec.gamma = cfg.gamma;
  rec.rho2 = cfg.rho2;
  rec.psi = cfg.psi;
  rec.n = cfg.n;
  rec.p = cfg.p();
  rec.config = cfg.beta_config;
  rec.seed = cfg.seed;
  rec.replicate = cfg.replicate;

  const GeneratedSample sample = generate_dataset(cfg);

  if (options.detect_separation || cfg.family == CovariateFamily::bernoulli) {
    rec.separated = detect_separation(sample.data).separated;
  }
  if (cfg.family == CovariateFamily::bernoulli) {
    rec.exists = !*rec.separated;
  } else if (options.exists_override) {
    rec.exists = *options.exists_override;
  } else {
    rec.exists = config_existence(cfg, options.phase).exists_asymptotically;
  }

  const double gamma0 = cfg.gamma0();
  try {
    rec.q = q_factor(cfg.kappa, cfg.gamma, gamma0, options.b, rec.exists);
  } catch (const Error&) {
    rec.q = 1.0;
  }

  FitResult fit;
  try {
    if (options.fitter) {
      fit = options.fitter(sample);
    } else {
      fit = fit_mjpl(sample.data, options.control);
      if (options.estimator == Estimator::ml) {
        if (!rec.exists) {
          rec.status = "ML not attempted: estimate does not exist asymptotically";
          fit = FitResult{};
        } else {
          fit = fit_ml(sample.data, options.control, fit.theta);
        }
      }
    }
  } catch (const Error& e) {
    rec.status = e.what();
    fit = FitResult{};
  }

  if (fit.theta.size() > 0) {
    rec.iterations = fit.iterations;
    rec.status = to_string(fit.status);
    const Eigen::Index offset = sample.data.has_intercept ? 1 : 0;
    const Vector estimates = fit.theta.tail(fit.theta.size() - offset);
    const std::span<const double> truth(sample.beta.data(), static_cast<std::size_t>(sample.beta.size()));
    const std::span<const double> est(estimates.data(), static_cast<std::size_t>(estimates.size()));
    try {
      const LineFit line = simple_linreg(truth, est);
      rec.delta0 = line.intercept;
      rec.delta1 = line.slope;
    } catch (const Error& e) {
      rec.status += std::string("; ") + e.what();
    }
    const Vector rescaled = rescale_estimates(estimates, rec.q);
    const std::span<const double> resc(rescaled.data(), static_cast<std::size_t>(rescaled.size()));
    rec.agg_bias = aggregate_bias(resc, truth);
    rec.agg_mse = aggregate_mse(resc, truth);
  }
  if (options.record_timing) {
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  return rec;
}

// ---------------------------------------------------------------------------

namespace {

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double result = 0.0;
  double f = 1.0 / static_cast<double>(base);
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= static_cast<double>(base);
  }
  return result;
}

double shifted(double u, double shift) {
  const double v = u + shift;
  return v >= 1.0 ? v - 1.0 : v;
}

}  // namespace

std::vector<DesignPoint> space_filling_design(int count, std::uint64_t seed) {
  if (count < 1) throw Error(Errc::invalid_argument, "space_filling_design: count must be >= 1");
  Rng rng(seed, 0, 0);
  const std::array<double, 3> shift{rng.uniform(), rng.uniform(), rng.uniform()};
  constexpr std::array<std::uint64_t, 3> bases{2, 3, 5};
  constexpr double edge = 1e-6;
  std::vector<DesignPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) {
    std::array<double, 3> u{};
    for (std::size_t d = 0; d < 3; ++d) {
      u[d] = std::clamp(shifted(radical_inverse(static_cast<std::uint64_t>(i), bases[d]), shift[d]), edge, 1.0 - edge);
    }
    out.push_back({0.6 * u[0], 20.0 * u[1], u[2]});
  }
  return out;
}

std::span<const GridPoint> test_points() {
  static constexpr std::array<GridPoint, 30> points{{
      {0.01, 1.0},  {0.01, 8.0},  {0.01, 15.0}, {0.05, 4.5},  {0.05, 11.5}, {0.05, 18.5},
      {0.15, 1.0},  {0.15, 8.0},  {0.15, 15.0}, {0.22, 8.0},  {0.22, 15.0}, {0.25, 4.5},
      {0.25, 11.5}, {0.25, 18.5}, {0.30, 8.0},  {0.30, 15.0}, {0.35, 1.0},  {0.35, 4.5},
      {0.35, 11.5}, {0.35, 18.5}, {0.40, 8.0},  {0.40, 15.0}, {0.45, 4.5},  {0.45, 11.5},
      {0.45, 18.5}, {0.50, 8.0},  {0.50, 15.0}, {0.55, 4.5},  {0.55, 11.5}, {0.55, 18.5},
  }};
  return points;
}

namespace {

struct MeanSd {
  std::optional<double> mean;
  std::optional<double> sd;
  int count = 0;
};

MeanSd summarize(const std::vector<double>& values) {
  MeanSd out;
  out.count = static_cast<int>(values.size());
  if (values.empty()) return out;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  out.mean = mean;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace

TrainingResult run_training_experiment(std::span<const DesignPoint> design, const TrainingOptions& options) {
  if (design.empty()) throw Error(Errc::invalid_argument, "run_training_experiment: empty design");
  if (options.reps < 1) throw Error(Errc::invalid_argument, "run_training_experiment: reps must be >= 1");

  std::vector<SimConfig> configs;
  for (std::size_t k = 0; k < design.size(); ++k) {
    SimConfig cfg;
    cfg.n = options.n;
    cfg.kappa = design[k].kappa;
    cfg.gamma = design[k].gamma;
    cfg.rho2 = design[k].rho2;
    cfg.psi = options.psi;
    cfg.beta_config = options.beta_config;
    cfg.seed = options.seed;
    cfg.point_id = k;
    cfg.validate();
    configs.push_back(cfg);
  }

  const auto verdicts = parallel_map(configs.size(), options.workers, [&](std::size_t k) {
    return options.replication.exists_override
               ? ExistenceVerdict{*options.replication.exists_override, 0.0, PhaseMethod::analytic}
               : config_existence(configs[k], options.replication.phase);
  });

  const std::size_t reps = static_cast<std::size_t>(options.reps);
  TrainingResult result;
  result.records = parallel_map(configs.size() * reps, options.workers, [&](std::size_t task) {
    const std::size_t k = task / reps;
    SimConfig cfg = configs[k];
    cfg.replicate = task % reps;
    ReplicationOptions rep_options = options.replication;
    rep_options.exists_override = verdicts[k].exists_asymptotically;
    return run_replication(cfg, rep_options);
  });

  for (std::size_t k = 0; k < configs.size(); ++k) {
    std::vector<double> d0;
    std::vector<double> d1;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& rec = result.records[k * reps + r];
      if (rec.delta0 && rec.delta1) {
        d0.push_back(*rec.delta0);
        d1.push_back(*rec.delta1);
      }
    }
    const MeanSd s0 = summarize(d0);
    const MeanSd s1 = summarize(d1);
    TrainingSummary row;
    row.point_id = k;
    row.point = design[k];
    row.beta0 = configs[k].beta0();
    row.gamma0 = configs[k].gamma0();
    row.exists = verdicts[k].exists_asymptotically;
    row.h = verdicts[k].h_value;
    row.n = configs[k].n;
    row.p = configs[k].p();
    row.reps_used = s1.count;
    row.mean_delta0 = s0.mean;
    row.mean_delta1 = s1.mean;
    row.sd_delta1 = s1.sd;
    result.summary.push_back(row);
  }
  return result;
}

std::vector<PowerLawPoint> power_law_points(std::span<const TrainingSummary> summary, double rho2_cutoff) {
  std::vector<PowerLawPoint> out;
  for (const auto& row : summary) {
    if (row.exists || row.point.rho2 > rho2_cutoff || !row.mean_delta1 || !(*row.mean_delta1 > 0.0)) continue;
    if (!(row.gamma0 > 0.0) || !(row.point.gamma > 0.0)) continue;
    out.push_back({row.point.kappa, row.point.gamma, row.gamma0, *row.mean_delta1});
  }
  return out;
}

TestResult run_test_experiment(const TestGrid& grid, const TestOptions& options) {
  const std::span<const GridPoint> points =
      grid.points.empty() ? test_points() : std::span<const GridPoint>(grid.points);
  struct Combination {
    int n;
    double psi;
    double rho2;
    BetaConfig config;
  };
  std::vector<Combination> combos;
  for (int n : grid.ns) {
    for (double psi : grid.psis) {
      for (double rho2 : grid.rho2s) {
        for (BetaConfig config : grid.configs) combos.push_back({n, psi, rho2, config});
      }
    }
  }
  if (combos.empty() || points.empty()) throw Error(Errc::invalid_argument, "run_test_experiment: empty grid");

  // Existence depends only on (kappa, gamma, rho2).
  std::map<std::pair<std::size_t, double>, bool> exists_cache;
  for (const auto& c : combos) {
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto key = std::make_pair(k, c.rho2);
      if (exists_cache.contains(key)) continue;
      const PhasePoint pt = PhasePoint::from_rho2(points[k].kappa, points[k].gamma, c.rho2);
      exists_cache[key] = mle_exists_asymptotically(pt, PhaseMethod::analytic, options.replication.phase)
                              .exists_asymptotically;
    }
  }

  TestResult result;
  result.records = parallel_map(combos.size() * points.size(), options.workers, [&](std::size_t task) {
    const std::size_t c = task / points.size();
    const std::size_t k = task % points.size();
    SimConfig cfg;
    cfg.n = combos[c].n;
    cfg.kappa = points[k].kappa;
    cfg.gamma = points[k].gamma;
    cfg.rho2 = combos[c].rho2;
    cfg.psi = combos[c].psi;
    cfg.beta_config = combos[c].config;
    cfg.seed = options.seed;
    cfg.point_id = task;
    cfg.replicate = 0;
    ReplicationOptions rep_options = options.replication;
    rep_options.exists_override = exists_cache.at({k, combos[c].rho2});
    return run_replication(cfg, rep_options);
  });

  for (std::size_t c = 0; c < combos.size(); ++c) {
    std::vector<double> observed;
    std::vector<double> predicted;
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto& rec = result.records[c * points.size() + k];
      if (rec.exists || !rec.delta1 || !(*rec.delta1 > 0.0)) continue;
      observed.push_back(std::log(*rec.delta1));
      predicted.push_back(std::log(rec.q));
    }
    R2Summary row{combos[c].n, combos[c].psi, combos[c].rho2, combos[c].config, observed.size(), std::nullopt};
    try {
      row.r2 = r2_test(observed, predicted);
    } catch (const Error&) {
    }
    result.r2.push_back(row);
  }
  return result;
}

AmseResult run_amse_experiment(std::span<const double> kappas, std::span<const double> gammas,
                               const AmseOptions& options) {
  if (kappas.empty() || gammas.empty()) throw Error(Errc::invalid_argument, "run_amse_experiment: empty grid");
  if (options.reps < 1) throw Error(Errc::invalid_argument, "run_amse_experiment: reps must be >= 1");
  const std::size_t cells = kappas.size() * gammas.size();
  const std::size_t reps = static_cast<std::size_t>(options.reps);

  auto cell_config = [&](std::size_t cell) {
    SimConfig cfg;
    cfg.n = options.n;
    cfg.kappa = kappas[cell / gammas.size()];
    cfg.gamma = gammas[cell % gammas.size()];
    cfg.rho2 = 0.0;
    cfg.beta_config = BetaConfig::s1;
    cfg.family = CovariateFamily::normal_scaled;
    cfg.has_intercept = false;
    cfg.seed = options.seed;
    cfg.point_id = cell;
    cfg.validate();
    return cfg;
  };

  const auto verdicts = parallel_map(cells, options.workers, [&](std::size_t cell) {
    return config_existence(cell_config(cell), options.replication.phase);
  });

  AmseResult result;
  result.records = parallel_map(cells * reps, options.workers, [&](std::size_t task) {
    SimConfig cfg = cell_config(task / reps);
    cfg.replicate = task % reps;
    ReplicationOptions rep_options = options.replication;
    rep_options.exists_override = verdicts[task / reps].exists_asymptotically;
    return run_replication(cfg, rep_options);
  });

  for (std::size_t cell = 0; cell < cells; ++cell) {
    const SimConfig cfg = cell_config(cell);
    std::vector<double> amse;
    std::vector<double> bias;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& rec = result.records[cell * reps + r];
      if (rec.agg_mse) amse.push_back(*rec.agg_mse);
      if (rec.agg_bias) bias.push_back(*rec.agg_bias);
    }
    AmseSummary row;
    row.kappa = cfg.kappa;
    row.gamma = cfg.gamma;
    row.p = cfg.p();
    row.exists = verdicts[cell].exists_asymptotically;
    row.q = q_factor(cfg.kappa, cfg.gamma, cfg.gamma, options.replication.b, row.exists);
    const MeanSd m = summarize(amse);
    row.reps_used = m.count;
    row.mean_amse = m.mean;
    if (m.sd) row.se_amse = *m.sd / std::sqrt(static_cast<double>(m.count));
    row.mean_bias = summarize(bias).mean;
    if (!bias.empty()) {
      row.min_bias = *std::min_element(bias.begin(), bias.end());
      row.max_bias = *std::max_element(bias.begin(), bias.end());
    }
    result.summary.push_back(row);
  }
  return result;
}

}  // namespace mjpl
