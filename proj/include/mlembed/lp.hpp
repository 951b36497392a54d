#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace mlembed {

enum class RowSense { le, eq, ge };

const char* to_string(RowSense sense);

struct LinearTerm {
  int var = -1;
  double coef = 0.0;
};

/// Sparse linear row: sum(coef * x[var]) (sense) rhs.
struct LinearConstraint {
  std::vector<LinearTerm> terms;
  RowSense sense = RowSense::le;
  double rhs = 0.0;

  double activity(std::span<const double> x) const;
  /// Signed violation (0 when satisfied).
  double violation(std::span<const double> x) const;
};

/// Dense LP in row form:  min cost'x + offset  s.t.  A x (sense) rhs,
/// lower <= x <= upper. Bounds may be infinite.
struct LpModel {
  Eigen::MatrixXd A;
  std::vector<RowSense> sense;
  Eigen::VectorXd rhs;
  Eigen::VectorXd cost;
  std::vector<double> lower;
  std::vector<double> upper;
  double objective_offset = 0.0;

  int num_rows() const { return static_cast<int>(A.rows()); }
  int num_cols() const { return static_cast<int>(A.cols()); }
};

enum class LpStatus { optimal, infeasible, unbounded, numerical };

const char* to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::numerical;
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
  // Reduced costs of the structural columns at the final basis (optimal only).
  std::vector<double> reduced_costs;
};

struct LpOptions {
  int max_iterations = 100000;
  // Switch to Bland's rule after this many consecutive degenerate pivots.
  int bland_after = 1000;
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_every = 64;
};

/// Two-phase bounded-variable primal simplex on a dense tableau. Pricing is
/// Dantzig with lowest-index tie-break; fully deterministic.
LpSolution solve_lp(const LpModel& model, const LpOptions& options = {});

/// Same model with the column bounds replaced (used by branch-and-bound).
LpSolution solve_lp(const LpModel& model, std::span<const double> lower,
                    std::span<const double> upper, const LpOptions& options = {});

}  // namespace mlembed
