#pragma once

// Dense linear algebra, Gauss quadrature, Nelder-Mead and simple
// regression primitives. Everything here is a pure function of its inputs.

#include <functional>
#include <span>

#include <Eigen/Dense>

#include "mjpl/error.hpp"

namespace mjpl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Lower Cholesky factor L with L * L^T = A. Diagonal entries are positive.
class LowerTriangular {
 public:
  explicit LowerTriangular(Matrix factor) : factor_(std::move(factor)) {}

  Eigen::Index dim() const { return factor_.rows(); }
  const Matrix& matrix() const { return factor_; }

  /// Solves A x = b.
  Vector solve(const Vector& b) const;
  /// Returns L^{-1} B.
  Matrix forward_solve(const Matrix& b) const;
  /// log det(A) = 2 * sum(log diag(L)).
  double log_det() const;
  /// L * L^T.
  Matrix reconstruct() const;

 private:
  Matrix factor_;
};

/// Cholesky factorization without pivoting. On failure a single retry is made
/// with jitter 1e-10 * trace / dim added to the diagonal; a second failure
/// throws Errc::not_positive_definite. Asymmetry beyond 1e-10 (relative to
/// max |A|) throws Errc::not_symmetric.
LowerTriangular cholesky(const Matrix& a);

/// sum_i w_i x_i x_i^T over the rows x_i of `x`.
Matrix weighted_xtwx(const Matrix& x, const Vector& w);

/// Diagonal of W^{1/2} X (X^T W X)^{-1} X^T W^{1/2}. Throws
/// Errc::singular_information when X^T W X cannot be factorized.
Vector hat_diagonals(const Matrix& x, const Vector& w);

/// Same, reusing an existing factor of X^T W X.
Vector hat_diagonals(const Matrix& x, const Vector& w, const LowerTriangular& info_factor);

struct QuadratureRule {
  Vector nodes;
  Vector weights;
};

/// Physicists' Gauss-Hermite rule: integral of f(x) exp(-x^2) dx is
/// approximated by sum_k weights[k] f(nodes[k]). Nodes are ascending.
QuadratureRule gauss_hermite(int m);

/// Gauss-Legendre rule on [-1, 1]. Nodes are ascending.
QuadratureRule gauss_legendre(int m);

/// E f(Z) for Z ~ N(0, 1) with the rule rescaled to the standard normal.
double normal_expectation(const QuadratureRule& rule, const std::function<double(double)>& f);

struct NelderMeadOptions {
  double tol = 1e-8;
  int max_iter = 5000;
  double initial_step = 0.5;
};

struct NelderMeadResult {
  Vector argmin;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes f with the Nelder-Mead simplex method (standard coefficients
/// 1, 2, 0.5, 0.5). Stops once the simplex diameter drops below tol or after
/// max_iter iterations. A non-finite objective value throws
/// Errc::non_finite_objective.
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                             const NelderMeadOptions& options = {});

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Ordinary least squares of y on (1, x).
LineFit simple_linreg(std::span<const double> x, std::span<const double> y);

/// Least-squares coefficients of y on the columns of x via the normal
/// equations. Throws Errc::singular_information for rank-deficient x.
Vector least_squares(const Matrix& x, const Vector& y);

/// Standard normal CDF and its inverse (Wichura's AS 241).
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace mjpl
