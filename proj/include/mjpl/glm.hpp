#pragma once

// Logistic log-likelihood, the Jeffreys-prior penalty and the fitters built
// on them: maximum likelihood (IRLS), maximum Jeffreys-penalized likelihood
// (quasi-Fisher scoring with step halving), and the Gamma/log-link GLM used
// for the power-law fit.

#include <optional>
#include <string>
#include <vector>

#include "mjpl/numerics.hpp"

namespace mjpl {

/// Binary responses, covariates, and whether the design carries an
/// intercept column (X-bar = [1 X]).
struct LogisticData {
  Vector y;
  Matrix x;
  bool has_intercept = true;

  /// Validates y in {0,1}, finite x and matching row counts.
  static LogisticData make(Vector y, Matrix x, bool has_intercept = true);

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index n_covariates() const { return x.cols(); }
  Eigen::Index n_coefficients() const { return x.cols() + (has_intercept ? 1 : 0); }

  /// The design actually used for fitting.
  Matrix design() const;
};

struct GlmControl {
  double tol = 1e-3;
  int max_iter = 300;
  double clamp_eps = 1e-10;
  int max_step_halvings = 10;
  /// ML fits stop with FitStatus::diverging once max |theta| exceeds this.
  /// ML fits that run out of iterations on separated data are reported as
  /// diverging too.
  double divergence_guard = 1e4;
};

enum class FitStatus { converged, max_iterations, diverging };

std::string to_string(FitStatus status);

struct FitResult {
  Vector theta;  // intercept first when present
  bool converged = false;
  FitStatus status = FitStatus::max_iterations;
  int iterations = 0;
  double score_norm = 0.0;  // L-inf norm of the (adjusted) score at theta
  double elapsed = 0.0;     // seconds
  std::vector<double> objective_trace;  // objective after each accepted step
};

double log_likelihood(const Vector& theta, const LogisticData& data);

/// 0.5 * log det(X^T W(theta) X), with mu clamped to [eps, 1 - eps].
double jeffreys_penalty(const Vector& theta, const LogisticData& data, double clamp_eps = 1e-10);

/// log_likelihood + jeffreys_penalty.
double penalized_log_likelihood(const Vector& theta, const LogisticData& data,
                                double clamp_eps = 1e-10);

/// Gradient of the penalized log-likelihood:
/// sum_i {y_i - mu_i + h_i (1/2 - mu_i)} x_i.
Vector penalized_score(const Vector& theta, const LogisticData& data, double clamp_eps = 1e-10);

/// Gradient of the log-likelihood, X^T (y - mu).
Vector ml_score(const Vector& theta, const LogisticData& data);

FitResult fit_ml(const LogisticData& data, const GlmControl& control = {},
                 const std::optional<Vector>& start = std::nullopt);

FitResult fit_mjpl(const LogisticData& data, const GlmControl& control = {},
                   const std::optional<Vector>& start = std::nullopt);

struct GammaFit {
  Vector coefficients;
  double dispersion = 0.0;          // Pearson statistic / (N - rank)
  double deviance = 0.0;
  double null_deviance = 0.0;
  double deviance_explained = 0.0;  // 1 - deviance / null_deviance
  int iterations = 0;
  bool converged = false;
};

/// Gamma-response GLM with log link fitted by IRLS. The null model is the
/// constant mean, so the design is expected to contain an intercept column.
GammaFit fit_gamma_log(const Matrix& design, const Vector& y,
                       const GlmControl& control = {.tol = 1e-10, .max_iter = 100});

}  // namespace mjpl
