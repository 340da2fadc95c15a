#include "mjpl/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mjpl {

namespace {
constexpr double inf = std::numeric_limits<double>::infinity();
}

void LinearProgram::validate() const {
  const Eigen::Index d = n_vars();
  const Eigen::Index m = n_rows();
  if (d == 0) throw Error(Errc::invalid_argument, "LinearProgram: no variables");
  if (constraints.cols() != d && m > 0) throw Error(Errc::dimension_mismatch, "LinearProgram: constraint columns");
  if (row_lower.size() != m || row_upper.size() != m) {
    throw Error(Errc::dimension_mismatch, "LinearProgram: row bounds");
  }
  if (var_lower.size() != d || var_upper.size() != d) {
    throw Error(Errc::dimension_mismatch, "LinearProgram: variable bounds");
  }
  if (!objective.allFinite() || !constraints.allFinite()) {
    throw Error(Errc::invalid_argument, "LinearProgram: non-finite coefficients");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (row_lower[i] > row_upper[i]) throw Error(Errc::invalid_argument, "LinearProgram: row bounds cross");
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    if (var_lower[j] > var_upper[j]) throw Error(Errc::invalid_argument, "LinearProgram: variable bounds cross");
  }
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "Optimal";
    case LpStatus::unbounded: return "Unbounded";
    case LpStatus::infeasible: return "Infeasible";
  }
  return "Unknown";
}

namespace {

// Variables are numbered: structural 0..d-1, row activities d..d+m-1, then
// phase-one artificials. Every constraint row is homogeneous in these
// variables, so the dictionary has no constant column.
class Dictionary {
 public:
  Dictionary(const LinearProgram& lp, const SimplexOptions& options) : lp_(lp), opt_(options) {
    const Eigen::Index d = lp.n_vars();
    const Eigen::Index m = lp.n_rows();

    lower_.assign(d + m, 0.0);
    upper_.assign(d + m, 0.0);
    value_.assign(d + m, 0.0);
    for (Eigen::Index j = 0; j < d; ++j) {
      lower_[j] = lp.var_lower[j];
      upper_[j] = lp.var_upper[j];
      value_[j] = std::clamp(0.0, lower_[j], upper_[j]);
      nonbasic_.push_back(j);
    }
    Vector x0(d);
    for (Eigen::Index j = 0; j < d; ++j) x0[j] = value_[j];

    std::vector<Eigen::Index> violated;
    const Vector activity = m > 0 ? Vector(lp.constraints * x0) : Vector();
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index s = d + i;
      lower_[s] = lp.row_lower[i];
      upper_[s] = lp.row_upper[i];
      const double r = activity[i];
      if (r >= lower_[s] - opt_.feasibility_tol && r <= upper_[s] + opt_.feasibility_tol) {
        value_[s] = r;
        basic_.push_back(s);
      } else {
        value_[s] = r < lower_[s] ? lower_[s] : upper_[s];
        nonbasic_.push_back(s);
        violated.push_back(i);
      }
    }

    // Artificial a_i = sign * (s_i - A_i x) >= 0 for violated rows.
    std::vector<double> sign(m, 0.0);
    for (Eigen::Index i : violated) {
      const Eigen::Index a = static_cast<Eigen::Index>(lower_.size());
      sign[i] = value_[d + i] > activity[i] ? 1.0 : -1.0;
      lower_.push_back(0.0);
      upper_.push_back(inf);
      value_.push_back(sign[i] * (value_[d + i] - activity[i]));
      artificial_.push_back(a);
    }

    const auto n_nonbasic = static_cast<Eigen::Index>(nonbasic_.size());
    // Rows 0..m-1 constraints, then phase-one and phase-two objectives.
    table_ = Matrix::Zero(m + 2, n_nonbasic);
    column_of_.assign(lower_.size(), -1);
    for (Eigen::Index c = 0; c < n_nonbasic; ++c) column_of_[nonbasic_[c]] = c;

    std::size_t next_art = 0;
    std::vector<Eigen::Index> row_basic(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (sign[i] == 0.0) {
        table_.row(i).head(d) = lp.constraints.row(i);
        row_basic[i] = d + i;
      } else {
        table_.row(i).head(d) = -sign[i] * lp.constraints.row(i);
        table_(i, column_of_[d + i]) = sign[i];
        row_basic[i] = artificial_[next_art++];
      }
    }
    basic_ = row_basic;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (sign[i] != 0.0) table_.row(m) -= table_.row(i);
    }
    table_.row(m + 1).head(d) = lp.objective.transpose();
  }

  LpSolution run() {
    LpSolution out;
    if (!artificial_.empty()) {
      iterate(phase_one_row(), out.pivots);  // bounded above by zero
      double infeasibility = 0.0;
      for (Eigen::Index a : artificial_) infeasibility += value_[a];
      if (infeasibility > opt_.feasibility_tol * (1.0 + static_cast<double>(artificial_.size()))) {
        out.status = LpStatus::infeasible;
        const Eigen::Index d = lp_.n_vars();
        out.farkas = Vector::Zero(lp_.n_rows());
        for (Eigen::Index i = 0; i < lp_.n_rows(); ++i) {
          const Eigen::Index c = column_of(d + i);
          if (c >= 0) out.farkas[i] = table_(phase_one_row(), c);
        }
        return out;
      }
      for (Eigen::Index a : artificial_) {
        lower_[a] = 0.0;
        upper_[a] = 0.0;
        value_[a] = 0.0;
      }
    }
    if (!iterate(phase_two_row(), out.pivots)) {
      out.status = LpStatus::unbounded;
      return out;
    }
    out.status = LpStatus::optimal;
    const Eigen::Index d = lp_.n_vars();
    out.point.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) out.point[j] = value_[j];
    out.value = lp_.objective.dot(out.point);
    return out;
  }

 private:
  Eigen::Index column_of(Eigen::Index v) const {
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(nonbasic_.size()); ++c) {
      if (nonbasic_[c] == v) return c;
    }
    return -1;
  }

  Eigen::Index constraint_rows() const { return table_.rows() - 2; }
  Eigen::Index phase_one_row() const { return table_.rows() - 2; }
  Eigen::Index phase_two_row() const { return table_.rows() - 1; }

  // Returns false when the objective is unbounded.
  bool iterate(Eigen::Index objective_row, long& pivots) {
    const Eigen::Index m = constraint_rows();
    int degenerate_run = 0;
    bool bland = opt_.bland_only;
    long since_refresh = 0;

    for (;;) {
      if (pivots >= opt_.max_pivots) throw Error(Errc::invalid_argument, "simplex: pivot limit reached");

      // Pricing.
      Eigen::Index enter = -1;
      double enter_dir = 0.0;
      double best = 0.0;
      for (Eigen::Index c = 0; c < table_.cols(); ++c) {
        const double rc = table_(objective_row, c);
        const Eigen::Index v = nonbasic_[c];
        double dir = 0.0;
        if (rc > opt_.optimality_tol && value_[v] < upper_[v] - opt_.feasibility_tol) dir = 1.0;
        if (rc < -opt_.optimality_tol && value_[v] > lower_[v] + opt_.feasibility_tol) dir = -1.0;
        if (dir == 0.0) continue;
        if (bland) {
          if (enter < 0 || v < nonbasic_[enter]) {
            enter = c;
            enter_dir = dir;
          }
        } else if (std::abs(rc) > best) {
          best = std::abs(rc);
          enter = c;
          enter_dir = dir;
        }
      }
      if (enter < 0) return true;

      // Ratio test.
      const Eigen::Index v_enter = nonbasic_[enter];
      double step = enter_dir > 0 ? upper_[v_enter] - value_[v_enter] : value_[v_enter] - lower_[v_enter];
      Eigen::Index leave = -1;
      double leave_alpha = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double alpha = table_(i, enter) * enter_dir;
        if (std::abs(alpha) <= opt_.pivot_tol) continue;
        const Eigen::Index b = basic_[i];
        double limit = alpha > 0 ? (upper_[b] - value_[b]) / alpha : (value_[b] - lower_[b]) / -alpha;
        if (limit == inf) continue;
        limit = std::max(limit, 0.0);
        const double tie = 1e-12 * (1.0 + (step == inf ? 0.0 : std::abs(step)));
        bool take = false;
        if (limit < step - tie) {
          take = true;
        } else if (leave >= 0 && limit <= step + tie) {
          take = bland ? b < basic_[leave] : std::abs(alpha) > std::abs(leave_alpha);
        }
        if (take) {
          step = limit;
          leave = i;
          leave_alpha = alpha;
        }
      }
      if (step == inf) return false;

      const double delta = enter_dir * step;
      value_[v_enter] += delta;
      for (Eigen::Index i = 0; i < m; ++i) value_[basic_[i]] += table_(i, enter) * delta;

      if (step <= opt_.feasibility_tol) {
        if (++degenerate_run >= opt_.degenerate_before_bland) bland = true;
      } else {
        degenerate_run = 0;
        bland = opt_.bland_only;
      }

      if (leave < 0) continue;  // bound flip of the entering variable

      const Eigen::Index v_leave = basic_[leave];
      value_[v_leave] = leave_alpha > 0 ? upper_[v_leave] : lower_[v_leave];
      pivot(leave, enter);
      ++pivots;
      if (++since_refresh >= 200) {
        refresh_basics();
        since_refresh = 0;
      }
    }
  }

  void pivot(Eigen::Index r, Eigen::Index c) {
    const double piv = table_(r, c);
    const Vector col = table_.col(c);
    const Eigen::RowVectorXd row = table_.row(r);
    table_.noalias() -= col * (row / piv);
    table_.row(r) = -row / piv;
    table_.col(c) = col / piv;
    table_(r, c) = 1.0 / piv;
    std::swap(basic_[r], nonbasic_[c]);
  }

  void refresh_basics() {
    const Eigen::Index m = constraint_rows();
    Vector xn(table_.cols());
    for (Eigen::Index c = 0; c < table_.cols(); ++c) xn[c] = value_[nonbasic_[c]];
    const Vector xb = table_.topRows(m) * xn;
    for (Eigen::Index i = 0; i < m; ++i) value_[basic_[i]] = xb[i];
  }

  const LinearProgram& lp_;
  SimplexOptions opt_;
  std::vector<double> lower_, upper_, value_;
  std::vector<Eigen::Index> basic_, nonbasic_, artificial_, column_of_;
  Matrix table_;
};

}  // namespace

LpSolution simplex_solve(const LinearProgram& lp, const SimplexOptions& options) {
  lp.validate();
  Dictionary dictionary(lp, options);
  return dictionary.run();
}

}  // namespace mjpl
