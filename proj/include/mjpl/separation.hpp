#pragma once

// Finite-sample existence of the logistic ML estimate. The data are
// separated (completely or quasi-completely) iff the linear program
//
//   maximize    sum_i s_i x_i^T b
//   subject to  s_i x_i^T b >= 0   for all i,   -1 <= b_j <= 1,
//
// with s_i = 2 y_i - 1 and x_i the design rows, has a positive optimum. The
// box keeps the program bounded; b = 0 is always feasible.

#include <optional>

#include "mjpl/glm.hpp"
#include "mjpl/simplex.hpp"

namespace mjpl {

struct SeparationVerdict {
  bool separated = false;
  /// Direction b with s_i x_i^T b >= 0 for all i, strict for some i.
  std::optional<Vector> certificate;
  /// Primal objective at the certificate (0 when not separated).
  double optimum = 0.0;
};

struct SeparationOptions {
  /// Optima above this are treated as positive.
  double tol = 1e-7;
  SimplexOptions simplex{};
};

LinearProgram separation_program(const LogisticData& data);

SeparationVerdict detect_separation(const LogisticData& data, const SeparationOptions& options = {});

}  // namespace mjpl
