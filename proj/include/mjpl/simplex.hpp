#pragma once

// Dense bounded-variable primal simplex.
//
//   maximize    c^T x
//   subject to  row_lower <= A x <= row_upper
//               var_lower <= x   <= var_upper
//
// Infinite bounds are allowed anywhere. The solver keeps a dictionary
// (basic = D * nonbasic) and exchanges one column per pivot. Pricing is
// Dantzig's largest reduced cost; after a run of degenerate pivots it falls
// back to Bland's smallest-index rule until the objective moves again, so the
// method terminates.

#include "mjpl/numerics.hpp"

namespace mjpl {

struct LinearProgram {
  Vector objective;
  Matrix constraints;
  Vector row_lower;
  Vector row_upper;
  Vector var_lower;
  Vector var_upper;

  Eigen::Index n_vars() const { return objective.size(); }
  Eigen::Index n_rows() const { return constraints.rows(); }
  /// Throws Errc::dimension_mismatch or Errc::invalid_argument.
  void validate() const;
};

enum class LpStatus { optimal, unbounded, infeasible };

const char* to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  double value = 0.0;
  Vector point;
  /// For Infeasible: row multipliers y at the end of phase one. With rows
  /// r = A x, the phase-one optimum certifies that no x within its bounds
  /// reaches the row bounds; for rows fixed at zero and x >= lower this means
  /// A^T y >= 0 componentwise at the bound-active variables.
  Vector farkas;
  long pivots = 0;
};

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int degenerate_before_bland = 50;
  bool bland_only = false;
  long max_pivots = 10'000'000;
};

LpSolution simplex_solve(const LinearProgram& lp, const SimplexOptions& options = {});

}  // namespace mjpl
