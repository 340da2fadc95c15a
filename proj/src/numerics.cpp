#include "mjpl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

namespace mjpl {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::not_symmetric: return "NotSymmetric";
    case Errc::not_positive_definite: return "NotPositiveDefinite";
    case Errc::singular_information: return "SingularInformation";
    case Errc::non_finite_objective: return "NonFiniteObjective";
    case Errc::degenerate_design: return "DegenerateDesign";
    case Errc::non_positive_response: return "NonPositiveResponse";
    case Errc::non_positive_input: return "NonPositiveInput";
    case Errc::non_positive_scale: return "NonPositiveScale";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::degenerate_bootstrap: return "DegenerateBootstrap";
    case Errc::degenerate_observations: return "DegenerateObservations";
    case Errc::quadrature_unstable: return "QuadratureUnstable";
    case Errc::unknown_config: return "UnknownConfig";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::parse_error: return "ParseError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Cholesky

Vector LowerTriangular::solve(const Vector& b) const {
  if (b.size() != dim()) throw Error(Errc::dimension_mismatch, "solve: rhs length");
  Vector z = factor_.triangularView<Eigen::Lower>().solve(b);
  return factor_.transpose().triangularView<Eigen::Upper>().solve(z);
}

Matrix LowerTriangular::forward_solve(const Matrix& b) const {
  if (b.rows() != dim()) throw Error(Errc::dimension_mismatch, "forward_solve: rhs rows");
  return factor_.triangularView<Eigen::Lower>().solve(b);
}

double LowerTriangular::log_det() const {
  return 2.0 * factor_.diagonal().array().log().sum();
}

Matrix LowerTriangular::reconstruct() const { return factor_ * factor_.transpose(); }

namespace {

bool try_factor(const Matrix& a, Matrix& out) {
  Eigen::LLT<Matrix, Eigen::Lower> llt(a);
  if (llt.info() != Eigen::Success) return false;
  Matrix l = llt.matrixL();
  if (!l.allFinite() || (l.diagonal().array() <= 0.0).any()) return false;
  out = std::move(l);
  return true;
}

}  // namespace

LowerTriangular cholesky(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(Errc::dimension_mismatch, "cholesky: matrix must be square and non-empty");
  }
  if (!a.allFinite()) throw Error(Errc::not_positive_definite, "cholesky: non-finite entries");
  const double scale = 1.0 + a.cwiseAbs().maxCoeff();
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(Errc::not_symmetric, "cholesky: asymmetric input");
  }

  Matrix l;
  if (try_factor(a, l)) return LowerTriangular(std::move(l));

  const double jitter = 1e-10 * a.trace() / static_cast<double>(a.rows());
  if (jitter > 0.0) {
    Matrix shifted = a;
    shifted.diagonal().array() += jitter;
    if (try_factor(shifted, l)) return LowerTriangular(std::move(l));
  }
  throw Error(Errc::not_positive_definite, "cholesky: non-positive pivot");
}

Matrix weighted_xtwx(const Matrix& x, const Vector& w) {
  if (w.size() != x.rows()) throw Error(Errc::dimension_mismatch, "weighted_xtwx: weight length");
  Matrix scaled = w.array().sqrt().matrix().asDiagonal() * x;
  Matrix out = Matrix::Zero(x.cols(), x.cols());
  out.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

Vector hat_diagonals(const Matrix& x, const Vector& w, const LowerTriangular& info_factor) {
  if (w.size() != x.rows()) throw Error(Errc::dimension_mismatch, "hat_diagonals: weight length");
  if (info_factor.dim() != x.cols()) {
    throw Error(Errc::dimension_mismatch, "hat_diagonals: factor dimension");
  }
  // Columns of L^{-1} X^T W^{1/2}; h_i is the squared norm of column i.
  Matrix scaled_t = x.transpose() * w.array().sqrt().matrix().asDiagonal();
  Matrix solved = info_factor.forward_solve(scaled_t);
  return solved.colwise().squaredNorm().transpose();
}

Vector hat_diagonals(const Matrix& x, const Vector& w) {
  try {
    return hat_diagonals(x, w, cholesky(weighted_xtwx(x, w)));
  } catch (const Error& e) {
    if (e.code() == Errc::not_positive_definite) {
      throw Error(Errc::singular_information, "hat_diagonals: X^T W X is singular");
    }
    throw;
  }
}

// ---------------------------------------------------------------------------
// Gauss-Hermite

QuadratureRule gauss_hermite(int m) {
  if (m < 1) throw Error(Errc::invalid_argument, "gauss_hermite: m must be >= 1");
  constexpr double pim4 = 0.7511255444649425;  // pi^{-1/4}

  // Jacobi-matrix eigenvalues as starting points, polished by Newton on the
  // orthonormal recurrence (which also gives the weights).
  Matrix jacobi = Matrix::Zero(m, m);
  for (int j = 1; j < m; ++j) jacobi(j - 1, j) = jacobi(j, j - 1) = std::sqrt(0.5 * j);
  const Vector guess = Eigen::SelfAdjointEigenSolver<Matrix>(jacobi, Eigen::EigenvaluesOnly).eigenvalues();

  QuadratureRule rule{Vector::Zero(m), Vector::Zero(m)};
  for (int i = 0; i < (m + 1) / 2; ++i) {
    // positive half, largest first
    double z = std::abs(guess[m - 1 - i]);
    if (m % 2 == 1 && i == m / 2) z = 0.0;
    double derivative = 0.0;
    for (int it = 0; it < 20; ++it) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 1; j <= m; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      derivative = std::sqrt(2.0 * m) * p2;
      const double step = p1 / derivative;
      z -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[m - 1 - i] = z;
    rule.nodes[i] = -z;
    rule.weights[m - 1 - i] = 2.0 / (derivative * derivative);
    rule.weights[i] = rule.weights[m - 1 - i];
  }
  if (m % 2 == 1) rule.nodes[m / 2] = 0.0;
  return rule;
}

QuadratureRule gauss_legendre(int m) {
  if (m < 1) throw Error(Errc::invalid_argument, "gauss_legendre: m must be >= 1");
  Matrix jacobi = Matrix::Zero(m, m);
  for (int j = 1; j < m; ++j) jacobi(j - 1, j) = jacobi(j, j - 1) = j / std::sqrt(4.0 * j * j - 1.0);
  const Vector guess = Eigen::SelfAdjointEigenSolver<Matrix>(jacobi, Eigen::EigenvaluesOnly).eigenvalues();

  QuadratureRule rule{Vector::Zero(m), Vector::Zero(m)};
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double z = std::abs(guess[m - 1 - i]);
    if (m % 2 == 1 && i == m / 2) z = 0.0;
    double derivative = 0.0;
    for (int it = 0; it < 20; ++it) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= m; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      derivative = m * (z * p1 - p2) / (z * z - 1.0);
      const double step = p1 / derivative;
      z -= step;
      if (std::abs(step) <= 1e-15) break;
    }
    rule.nodes[m - 1 - i] = z;
    rule.nodes[i] = -z;
    rule.weights[m - 1 - i] = 2.0 / ((1.0 - z * z) * derivative * derivative);
    rule.weights[i] = rule.weights[m - 1 - i];
  }
  if (m % 2 == 1) rule.nodes[m / 2] = 0.0;
  return rule;
}

double normal_expectation(const QuadratureRule& rule, const std::function<double(double)>& f) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < rule.nodes.size(); ++k) {
    total += rule.weights[k] * f(std::numbers::sqrt2 * rule.nodes[k]);
  }
  return total / std::sqrt(std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Nelder-Mead

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                             const NelderMeadOptions& options) {
  const Eigen::Index d = x0.size();
  auto eval = [&](const Vector& x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw Error(Errc::non_finite_objective, "nelder_mead: objective");
    return v;
  };

  std::vector<Vector> vertex(d + 1, x0);
  std::vector<double> value(d + 1);
  value[0] = eval(x0);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double step = x0[j] != 0.0 ? options.initial_step * std::abs(x0[j]) : options.initial_step;
    vertex[j + 1][j] += step;
    value[j + 1] = eval(vertex[j + 1]);
  }

  std::vector<std::size_t> order(d + 1);
  NelderMeadResult result;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[d > 0 ? d - 1 : 0];

    double diameter = 0.0;
    for (std::size_t k : order) {
      diameter = std::max(diameter, (vertex[k] - vertex[best]).cwiseAbs().maxCoeff());
    }
    if (diameter < options.tol) {
      result.converged = true;
      break;
    }

    Vector centroid = Vector::Zero(d);
    for (std::size_t k : order) {
      if (k != worst) centroid += vertex[k];
    }
    centroid /= static_cast<double>(d);

    const Vector reflected = centroid + (centroid - vertex[worst]);
    const double f_reflected = eval(reflected);
    if (f_reflected < value[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - vertex[worst]);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        vertex[worst] = expanded;
        value[worst] = f_expanded;
      } else {
        vertex[worst] = reflected;
        value[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < value[second_worst]) {
      vertex[worst] = reflected;
      value[worst] = f_reflected;
      continue;
    }

    const bool outside = f_reflected < value[worst];
    const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                      : Vector(centroid + 0.5 * (vertex[worst] - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : value[worst])) {
      vertex[worst] = contracted;
      value[worst] = f_contracted;
      continue;
    }

    for (std::size_t k : order) {
      if (k == best) continue;
      vertex[k] = vertex[best] + 0.5 * (vertex[k] - vertex[best]);
      value[k] = eval(vertex[k]);
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(value.begin(), value.end()) - value.begin());
  result.argmin = vertex[best];
  result.value = value[best];
  result.iterations = iter;
  return result;
}

// ---------------------------------------------------------------------------
// Simple regression

LineFit simple_linreg(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::length_mismatch, "simple_linreg: x and y lengths");
  if (x.size() < 2) throw Error(Errc::degenerate_design, "simple_linreg: need at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    sxx += dx * dx;
    sxy += dx * (y[i] - mean_y);
  }
  if (sxx <= 1e-24 * n * (1.0 + mean_x * mean_x)) {
    throw Error(Errc::degenerate_design, "simple_linreg: x has no variance");
  }
  const double slope = sxy / sxx;
  return {mean_y - slope * mean_x, slope};
}

Vector least_squares(const Matrix& x, const Vector& y) {
  if (y.size() != x.rows()) throw Error(Errc::dimension_mismatch, "least_squares: response length");
  try {
    return cholesky(x.transpose() * x).solve(x.transpose() * y);
  } catch (const Error& e) {
    if (e.code() == Errc::not_positive_definite) {
      throw Error(Errc::singular_information, "least_squares: design is rank deficient");
    }
    throw;
  }
}

// ---------------------------------------------------------------------------
// Normal distribution

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw Error(Errc::invalid_argument, "normal_quantile: p outside [0, 1]");
  }
  const double q = p - 0.5;
  double value = 0.0;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    value = q *
            (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                 45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
              133.14166789178437745) * r + 3.387132872796366608) /
            (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                 21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
              42.313330701600911252) * r + 1.0);
    return value;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                 1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                 0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                 0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                 7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

}  // namespace mjpl
