#include "mjpl/glm.hpp"

#include "mjpl/separation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace mjpl {

LogisticData LogisticData::make(Vector y, Matrix x, bool has_intercept) {
  if (y.size() != x.rows()) throw Error(Errc::dimension_mismatch, "LogisticData: y and X rows differ");
  if (y.size() == 0) throw Error(Errc::invalid_argument, "LogisticData: no observations");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) throw Error(Errc::invalid_argument, "LogisticData: y must be 0 or 1");
  }
  if (!x.allFinite()) throw Error(Errc::invalid_argument, "LogisticData: non-finite covariate");
  if (!has_intercept && x.cols() == 0) throw Error(Errc::invalid_argument, "LogisticData: empty design");
  return LogisticData{std::move(y), std::move(x), has_intercept};
}

Matrix LogisticData::design() const {
  if (!has_intercept) return x;
  Matrix out(x.rows(), x.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(x.cols()) = x;
  return out;
}

std::string to_string(FitStatus status) {
  switch (status) {
    case FitStatus::converged: return "Converged";
    case FitStatus::max_iterations: return "MaxIterations";
    case FitStatus::diverging: return "Diverging";
  }
  return "Unknown";
}

namespace {

double softplus(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double inv_logit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

void check_theta(const Vector& theta, const Matrix& design) {
  if (theta.size() != design.cols()) {
    throw Error(Errc::dimension_mismatch, "theta length does not match design columns");
  }
}

// Everything the scoring iterations need at one value of theta.
struct Evaluation {
  Vector mu;          // exact
  Vector weights;     // from clamped mu
  std::optional<LowerTriangular> info;
  double loglik = 0.0;
  double objective = 0.0;
};

double loglik_from_eta(const Vector& eta, const Vector& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) total += y[i] * eta[i] - softplus(eta[i]);
  return total;
}

Vector clamped_weights(const Vector& mu, double eps) {
  Vector w(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double m = std::clamp(mu[i], eps, 1.0 - eps);
    w[i] = m * (1.0 - m);
  }
  return w;
}

LowerTriangular factor_information(const Matrix& design, const Vector& w) {
  try {
    return cholesky(weighted_xtwx(design, w));
  } catch (const Error& e) {
    if (e.code() == Errc::not_positive_definite) {
      throw Error(Errc::singular_information, "X^T W X is not positive definite");
    }
    throw;
  }
}

Evaluation evaluate(const Vector& theta, const Matrix& design, const Vector& y, double eps,
                    bool penalized) {
  Evaluation ev;
  const Vector eta = design * theta;
  ev.mu = eta.unaryExpr(&inv_logit);
  ev.weights = clamped_weights(ev.mu, eps);
  ev.loglik = loglik_from_eta(eta, y);
  ev.info.emplace(factor_information(design, ev.weights));
  ev.objective = ev.loglik + (penalized ? 0.5 * ev.info->log_det() : 0.0);
  return ev;
}

Vector score_at(const Evaluation& ev, const Matrix& design, const Vector& y, double eps, bool penalized) {
  Vector residual = y - ev.mu;
  if (penalized) {
    const Vector h = hat_diagonals(design, ev.weights, *ev.info);
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
      const double m = std::clamp(ev.mu[i], eps, 1.0 - eps);
      residual[i] += h[i] * (0.5 - m);
    }
  }
  return design.transpose() * residual;
}

// Shared quasi-Fisher scoring loop. For ML the "score" is the ordinary one
// and the objective the log-likelihood.
FitResult scoring_fit(const LogisticData& data, const GlmControl& control, const std::optional<Vector>& start,
                      bool penalized) {
  if (control.tol <= 0.0 || control.max_iter < 1) {
    throw Error(Errc::invalid_argument, "GlmControl: tol must be > 0 and max_iter >= 1");
  }
  const auto started = std::chrono::steady_clock::now();
  const Matrix design = data.design();
  const Vector& y = data.y;
  const double eps = control.clamp_eps;

  FitResult result;
  result.theta = start ? *start : Vector::Zero(design.cols());
  check_theta(result.theta, design);

  Evaluation current = evaluate(result.theta, design, y, eps, penalized);
  for (int iter = 1; iter <= control.max_iter; ++iter) {
    result.iterations = iter;
    const Vector score = score_at(current, design, y, eps, penalized);
    const Vector step = current.info->solve(score);

    Vector candidate;
    std::optional<Evaluation> next;
    double scale = 1.0;
    for (int halving = 0; halving <= control.max_step_halvings; ++halving, scale *= 0.5) {
      candidate = result.theta + scale * step;
      try {
        Evaluation trial = evaluate(candidate, design, y, eps, penalized);
        // Sufficient increase: a tenth of the linear prediction. Plain
        // increase is not enough -- when the curvature is about twice the
        // information the full step lands on the mirror point with a tiny
        // gain, and the iteration 2-cycles. Near the optimum the objective
        // is flat to round-off; there a step must shrink the score instead.
        const double slack = 1e-12 * (1.0 + std::abs(current.objective));
        const double predicted = scale * score.dot(step);
        const double gain = trial.objective - current.objective;
        bool improves = predicted > slack ? gain >= 0.1 * predicted : gain > slack;
        if (!improves && predicted <= slack && gain >= -slack) {
          improves = score_at(trial, design, y, eps, penalized).cwiseAbs().maxCoeff() <
                     score.cwiseAbs().maxCoeff();
        }
        const bool last = halving == control.max_step_halvings;
        if (improves || last) {
          next = std::move(trial);
          break;
        }
      } catch (const Error& e) {
        if (e.code() != Errc::singular_information) throw;
      }
    }
    if (!next) throw Error(Errc::singular_information, "information matrix singular along the step");

    const double change = (candidate - result.theta).cwiseAbs().maxCoeff();
    result.theta = std::move(candidate);
    current = std::move(*next);
    result.objective_trace.push_back(current.objective);

    if (!penalized && result.theta.cwiseAbs().maxCoeff() > control.divergence_guard) {
      result.status = FitStatus::diverging;
      break;
    }
    if (change < control.tol) {
      result.status = FitStatus::converged;
      break;
    }
  }
  result.converged = result.status == FitStatus::converged;
  result.score_norm = score_at(current, design, y, eps, penalized).cwiseAbs().maxCoeff();
  result.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace

double log_likelihood(const Vector& theta, const LogisticData& data) {
  const Matrix design = data.design();
  check_theta(theta, design);
  return loglik_from_eta(design * theta, data.y);
}

double jeffreys_penalty(const Vector& theta, const LogisticData& data, double clamp_eps) {
  const Matrix design = data.design();
  check_theta(theta, design);
  const Vector mu = (design * theta).unaryExpr(&inv_logit);
  return 0.5 * factor_information(design, clamped_weights(mu, clamp_eps)).log_det();
}

double penalized_log_likelihood(const Vector& theta, const LogisticData& data, double clamp_eps) {
  return log_likelihood(theta, data) + jeffreys_penalty(theta, data, clamp_eps);
}

Vector penalized_score(const Vector& theta, const LogisticData& data, double clamp_eps) {
  const Matrix design = data.design();
  check_theta(theta, design);
  const Evaluation ev = evaluate(theta, design, data.y, clamp_eps, true);
  return score_at(ev, design, data.y, clamp_eps, true);
}

Vector ml_score(const Vector& theta, const LogisticData& data) {
  const Matrix design = data.design();
  check_theta(theta, design);
  const Vector mu = (design * theta).unaryExpr(&inv_logit);
  return design.transpose() * (data.y - mu);
}

FitResult fit_ml(const LogisticData& data, const GlmControl& control, const std::optional<Vector>& start) {
  FitResult fit = scoring_fit(data, control, start, false);
  // On separated data theta grows only logarithmically in the iteration
  // count, so the guard is rarely reached; name the cause when it is
  // separation rather than slow convergence.
  if (fit.status == FitStatus::max_iterations && detect_separation(data).separated) {
    fit.status = FitStatus::diverging;
  }
  return fit;
}

FitResult fit_mjpl(const LogisticData& data, const GlmControl& control, const std::optional<Vector>& start) {
  return scoring_fit(data, control, start, true);
}

// ---------------------------------------------------------------------------
// Gamma GLM, log link. The IRLS working weights are identically one, so each
// iteration is an ordinary least-squares fit of the working response.

namespace {

double gamma_deviance(const Vector& y, const Vector& mu) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) d += -std::log(y[i] / mu[i]) + (y[i] - mu[i]) / mu[i];
  return 2.0 * d;
}

}  // namespace

GammaFit fit_gamma_log(const Matrix& design, const Vector& y, const GlmControl& control) {
  if (y.size() != design.rows()) throw Error(Errc::dimension_mismatch, "fit_gamma_log: response length");
  if (y.size() == 0) throw Error(Errc::invalid_argument, "fit_gamma_log: no observations");
  if ((y.array() <= 0.0).any() || !y.allFinite()) {
    throw Error(Errc::non_positive_response, "fit_gamma_log: responses must be positive");
  }
  const Eigen::Index n = y.size();
  const Eigen::Index k = design.cols();

  GammaFit fit;
  Vector eta = y.array().log().matrix();
  fit.coefficients = Vector::Zero(k);
  for (int iter = 1; iter <= control.max_iter; ++iter) {
    fit.iterations = iter;
    const Vector mu = eta.array().exp().matrix();
    const Vector working = eta + ((y - mu).array() / mu.array()).matrix();
    const Vector updated = least_squares(design, working);
    const double change = (updated - fit.coefficients).cwiseAbs().maxCoeff();
    fit.coefficients = updated;
    eta = design * fit.coefficients;
    if (iter > 1 && change < control.tol) {
      fit.converged = true;
      break;
    }
  }

  const Vector mu = eta.array().exp().matrix();
  const double pearson = ((y - mu).array() / mu.array()).square().sum();
  fit.dispersion = n > k ? pearson / static_cast<double>(n - k) : 0.0;
  fit.deviance = gamma_deviance(y, mu);
  fit.null_deviance = gamma_deviance(y, Vector::Constant(n, y.mean()));
  fit.deviance_explained = fit.null_deviance > 0.0 ? 1.0 - fit.deviance / fit.null_deviance : 1.0;
  return fit;
}

}  // namespace mjpl
