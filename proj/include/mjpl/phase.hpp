#pragma once

// Asymptotic existence of the logistic ML estimate with Gaussian covariates.
//
// With V ~ N(0,1), P(Y = 1 | V) = 1 / (1 + exp(-(beta0 + gamma0 V))),
// Y in {-1, +1} and Z ~ N(0,1) independent of (Y, V), the threshold is
//
//   h(beta0, gamma0) = min over (t0, t1) of E[(t0 Y + t1 Y V - Z)_+^2]
//
// and the ML estimate exists with probability tending to one iff
// kappa < h. The Z-expectation is done in closed form,
// E(a - Z)_+^2 = (a^2 + 1) Phi(a) + a phi(a), with Bernoulli mixing over Y.
// The V-expectation is composite Gauss-Legendre on [-12, 12] with panel
// breaks clustered around the logistic transition v = -beta0 / gamma0: a
// plain Gauss-Hermite rule cannot resolve a transition of width 1/gamma0
// once gamma0 is large (60 nodes are off by 0.02 at gamma0 = 20).
//
// mc_phase_boundary is an independent empirical estimate of the same
// threshold from simulated data and the separation linear program.

#include <cstdint>
#include <string>

namespace mjpl {

struct PhasePoint {
  double kappa = 0.0;
  double beta0 = 0.0;
  double gamma0 = 0.0;

  double gamma() const;
  /// beta0 = gamma * rho, gamma0 = gamma * sqrt(1 - rho^2), rho = +sqrt(rho2).
  static PhasePoint from_rho2(double kappa, double gamma, double rho2);
  void validate() const;
};

enum class PhaseMethod { analytic, monte_carlo };

std::string to_string(PhaseMethod method);

struct ExistenceVerdict {
  bool exists_asymptotically = false;
  double h_value = 0.0;
  PhaseMethod method = PhaseMethod::analytic;
};

struct HmleOptions {
  /// Gauss-Legendre nodes per panel.
  int panel_nodes = 20;
  int restarts = 5;
  /// Restarted minima further apart than this throw Errc::quadrature_unstable.
  double restart_tol = 1e-3;
};

/// E[(t0 Y + t1 Y V - Z)_+^2] by quadrature; exposed for tests.
double phase_objective(double t0, double t1, double beta0, double gamma0, int panel_nodes = 20);

double h_mle(double beta0, double gamma0, const HmleOptions& options = {});

struct McBoundaryOptions {
  int n = 2000;
  int reps = 20;
  std::uint64_t seed = 1;
  /// Bisection stops when the bracket is narrower than this.
  double width = 0.005;
  double upper = 0.6;
};

/// Fraction of `reps` simulated data sets (normal covariates, identity
/// covariance) at dimension ratio kappa that are separated.
double separated_fraction(double kappa, double beta0, double gamma0, int n, int reps, std::uint64_t seed);

/// Bisection on kappa in (0, upper) for the point where the separated
/// fraction crosses one half. Replicate r at every bisection step uses the
/// stream (seed, 0, r).
double mc_phase_boundary(double beta0, double gamma0, const McBoundaryOptions& options = {});

/// Exists iff kappa is strictly below the threshold; ties count as not
/// existing.
ExistenceVerdict mle_exists_asymptotically(const PhasePoint& point, PhaseMethod method = PhaseMethod::analytic,
                                           const HmleOptions& analytic = {}, const McBoundaryOptions& mc = {});

}  // namespace mjpl
