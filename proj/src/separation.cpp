#include "mjpl/separation.hpp"

#include <limits>

namespace mjpl {

LinearProgram separation_program(const LogisticData& data) {
  Matrix signed_design = data.design();
  for (Eigen::Index i = 0; i < signed_design.rows(); ++i) {
    if (data.y[i] == 0.0) signed_design.row(i) *= -1.0;
  }
  const Eigen::Index n = signed_design.rows();
  const Eigen::Index d = signed_design.cols();

  LinearProgram lp;
  lp.objective = signed_design.colwise().sum().transpose();
  lp.constraints = std::move(signed_design);
  lp.row_lower = Vector::Zero(n);
  lp.row_upper = Vector::Constant(n, std::numeric_limits<double>::infinity());
  lp.var_lower = Vector::Constant(d, -1.0);
  lp.var_upper = Vector::Constant(d, 1.0);
  return lp;
}

LinearProgram alternative_program(const Matrix& signed_design) {
  // Feasible iff some w > 0 has A^T w = 0 (Gordan), i.e. iff no separation.
  const Eigen::Index n = signed_design.rows();
  const Eigen::Index d = signed_design.cols();
  LinearProgram lp;
  lp.objective = Vector::Zero(n);
  lp.constraints = signed_design.transpose();
  lp.row_lower = Vector::Zero(d);
  lp.row_upper = Vector::Zero(d);
  lp.var_lower = Vector::Ones(n);
  lp.var_upper = Vector::Constant(n, std::numeric_limits<double>::infinity());
  return lp;
}

SeparationVerdict detect_separation(const LogisticData& data, const SeparationOptions& options) {
  // The program above is solved through its dual, min over w >= 1 of
  // |A^T w|_1: the optimum is zero exactly when the primal optimum is. The
  // dual has d rows instead of n and a non-degenerate start, and when it is
  // infeasible its phase-one multipliers are a separating direction.
  const LinearProgram primal = separation_program(data);
  const Matrix& a = primal.constraints;
  SeparationVerdict verdict;
  if (a.cols() == 0) return verdict;

  const LpSolution solution = simplex_solve(alternative_program(a), options.simplex);
  if (solution.status == LpStatus::optimal) return verdict;
  if (solution.status != LpStatus::infeasible || solution.farkas.size() != a.cols()) {
    throw Error(Errc::invalid_argument, std::string("separation program returned ") + to_string(solution.status));
  }

  Vector b = solution.farkas;
  Vector margins = a * b;
  if (margins.sum() < 0.0) {
    b = -b;
    margins = -margins;
  }
  const double scale = b.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return verdict;
  b /= scale;
  margins /= scale;
  // Round-off below the feasibility tolerance is not a violated constraint.
  const double slack = 1e-9 * (1.0 + a.cwiseAbs().maxCoeff());
  if (margins.minCoeff() < -slack) {
    throw Error(Errc::invalid_argument, "separation program: certificate violates a constraint");
  }
  verdict.optimum = margins.cwiseMax(0.0).sum();
  verdict.separated = verdict.optimum > options.tol;
  if (verdict.separated) verdict.certificate = b;
  return verdict;
}

}  // namespace mjpl
