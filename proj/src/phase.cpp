#include "mjpl/phase.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <vector>

#include "mjpl/numerics.hpp"
#include "mjpl/separation.hpp"
#include "mjpl/sim.hpp"

namespace mjpl {

double PhasePoint::gamma() const { return std::hypot(beta0, gamma0); }

PhasePoint PhasePoint::from_rho2(double kappa, double gamma, double rho2) {
  if (!(rho2 >= 0.0 && rho2 <= 1.0)) throw Error(Errc::invalid_argument, "rho2 must lie in [0, 1]");
  if (!(gamma >= 0.0)) throw Error(Errc::invalid_argument, "gamma must be non-negative");
  return {kappa, gamma * std::sqrt(rho2), gamma * std::sqrt(1.0 - rho2)};
}

void PhasePoint::validate() const {
  if (!(kappa > 0.0 && kappa < 1.0)) throw Error(Errc::invalid_argument, "kappa must lie in (0, 1)");
  if (!(gamma0 >= 0.0) || !std::isfinite(gamma0)) throw Error(Errc::invalid_argument, "gamma0 must be >= 0");
  if (!std::isfinite(beta0)) throw Error(Errc::invalid_argument, "beta0 must be finite");
}

std::string to_string(PhaseMethod method) {
  return method == PhaseMethod::analytic ? "analytic" : "monte-carlo";
}

namespace {

// E(a - Z)_+^2 for Z ~ N(0, 1).
double positive_part_second_moment(double a) {
  const double density = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, (a * a + 1.0) * normal_cdf(a) + a * density);
}

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Nodes and weights for E f(V), V ~ N(0, 1).
QuadratureRule v_rule(double beta0, double gamma0, int panel_nodes) {
  constexpr double edge = 12.0;
  std::vector<double> breaks{-edge, -6.0, -3.0, 0.0, 3.0, 6.0, edge};
  if (gamma0 > 0.0) {
    const double centre = -beta0 / gamma0;
    breaks.push_back(centre);
    for (double c : {0.5, 2.0, 8.0, 32.0}) {
      breaks.push_back(centre - c / gamma0);
      breaks.push_back(centre + c / gamma0);
    }
  }
  std::erase_if(breaks, [&](double v) { return !(v >= -edge && v <= edge); });
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(), [](double u, double v) { return v - u < 1e-12; }),
               breaks.end());

  const QuadratureRule gl = gauss_legendre(panel_nodes);
  const auto panels = static_cast<Eigen::Index>(breaks.size() - 1);
  QuadratureRule rule{Vector(panels * panel_nodes), Vector(panels * panel_nodes)};
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (Eigen::Index k = 0; k < panels; ++k) {
    const double lo = breaks[static_cast<std::size_t>(k)];
    const double hi = breaks[static_cast<std::size_t>(k) + 1];
    for (int j = 0; j < panel_nodes; ++j) {
      const double v = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.nodes[j];
      rule.nodes[k * panel_nodes + j] = v;
      rule.weights[k * panel_nodes + j] = 0.5 * (hi - lo) * gl.weights[j] * norm * std::exp(-0.5 * v * v);
    }
  }
  return rule;
}

struct VNode {
  double v;
  double weight_pos;  // weight * P(Y = 1 | v)
  double weight_neg;
};

std::vector<VNode> mixed_nodes(double beta0, double gamma0, int panel_nodes) {
  const QuadratureRule rule = v_rule(beta0, gamma0, panel_nodes);
  std::vector<VNode> out;
  out.reserve(static_cast<std::size_t>(rule.nodes.size()));
  for (Eigen::Index k = 0; k < rule.nodes.size(); ++k) {
    const double p = logistic(beta0 + gamma0 * rule.nodes[k]);
    out.push_back({rule.nodes[k], rule.weights[k] * p, rule.weights[k] * (1.0 - p)});
  }
  return out;
}

double objective_with_nodes(double t0, double t1, const std::vector<VNode>& nodes) {
  double total = 0.0;
  for (const auto& node : nodes) {
    const double a = t0 + t1 * node.v;
    total += node.weight_pos * positive_part_second_moment(a) + node.weight_neg * positive_part_second_moment(-a);
  }
  return total;
}

}  // namespace

double phase_objective(double t0, double t1, double beta0, double gamma0, int panel_nodes) {
  if (panel_nodes < 2) throw Error(Errc::invalid_argument, "phase_objective: panel_nodes must be >= 2");
  return objective_with_nodes(t0, t1, mixed_nodes(beta0, gamma0, panel_nodes));
}

double h_mle(double beta0, double gamma0, const HmleOptions& options) {
  if (!(gamma0 >= 0.0) || !std::isfinite(gamma0) || !std::isfinite(beta0)) {
    throw Error(Errc::invalid_argument, "h_mle: need finite beta0 and gamma0 >= 0");
  }
  if (options.panel_nodes < 2) throw Error(Errc::invalid_argument, "h_mle: panel_nodes must be >= 2");
  if (options.restarts < 1) throw Error(Errc::invalid_argument, "h_mle: restarts must be >= 1");

  const std::vector<VNode> nodes = mixed_nodes(beta0, gamma0, options.panel_nodes);
  auto objective = [&](const Vector& t) { return objective_with_nodes(t[0], t[1], nodes); };

  constexpr std::array<std::array<double, 2>, 5> starts{{{0.0, 0.0}, {0.5, -1.0}, {-0.5, -1.0}, {0.0, -3.0}, {1.0, 1.0}}};
  NelderMeadOptions nm;
  nm.tol = 1e-9;
  nm.max_iter = 4000;
  double best = std::numeric_limits<double>::infinity();
  double worst = -best;
  for (int r = 0; r < options.restarts; ++r) {
    const auto& s = starts[static_cast<std::size_t>(r) % starts.size()];
    Vector x0(2);
    x0 << s[0] + 0.1 * (r / 5), s[1];
    const double value = nelder_mead(objective, x0, nm).value;
    best = std::min(best, value);
    worst = std::max(worst, value);
  }
  if (worst - best > options.restart_tol) {
    throw Error(Errc::quadrature_unstable, "h_mle: restarts disagree");
  }
  return best;
}

double separated_fraction(double kappa, double beta0, double gamma0, int n, int reps, std::uint64_t seed) {
  // Flipping every response maps beta0 to -beta0 and leaves separation
  // unchanged, so only |beta0| matters.
  const double gamma = std::hypot(beta0, gamma0);
  SimConfig cfg;
  cfg.n = n;
  cfg.kappa = kappa;
  cfg.gamma = gamma;
  cfg.rho2 = gamma > 0.0 ? (beta0 * beta0) / (gamma * gamma) : 0.0;
  cfg.psi = 0.0;
  cfg.beta_config = BetaConfig::train_grid;
  cfg.family = CovariateFamily::normal_ar1;
  cfg.seed = seed;
  cfg.point_id = 0;

  int separated = 0;
  for (int r = 0; r < reps; ++r) {
    cfg.replicate = static_cast<std::uint64_t>(r);
    const GeneratedSample sample = generate_dataset(cfg);
    if (detect_separation(sample.data).separated) ++separated;
  }
  return static_cast<double>(separated) / static_cast<double>(reps);
}

double mc_phase_boundary(double beta0, double gamma0, const McBoundaryOptions& options) {
  if (options.n < 500 || options.reps < 20) {
    throw Error(Errc::invalid_argument, "mc_phase_boundary: need n >= 500 and reps >= 20");
  }
  double lo = 0.0;
  double hi = options.upper;
  while (hi - lo > options.width) {
    const double mid = 0.5 * (lo + hi);
    if (separated_fraction(mid, beta0, gamma0, options.n, options.reps, options.seed) >= 0.5) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ExistenceVerdict mle_exists_asymptotically(const PhasePoint& point, PhaseMethod method, const HmleOptions& analytic,
                                           const McBoundaryOptions& mc) {
  point.validate();
  ExistenceVerdict verdict;
  verdict.method = method;
  verdict.h_value = method == PhaseMethod::analytic ? h_mle(point.beta0, point.gamma0, analytic)
                                                    : mc_phase_boundary(point.beta0, point.gamma0, mc);
  verdict.exists_asymptotically = point.kappa < verdict.h_value;
  return verdict;
}

}  // namespace mjpl
