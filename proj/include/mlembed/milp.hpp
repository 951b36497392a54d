#pragma once

#include <vector>

#include "mlembed/problem.hpp"

namespace mlembed {

enum class MilpStatus { optimal, infeasible, gap_limit, node_limit };

const char* to_string(MilpStatus status);

struct MilpOptions {
  double abs_gap = 1e-6;
  double rel_gap = 1e-6;
  long node_limit = 1000000;
  double int_tol = 1e-6;
  int threads = 1;
  // Nodes processed per round; fixed so results do not depend on `threads`.
  int batch = 4;
  bool record_trace = false;
  LpOptions lp;
};

struct BoundTrace {
  long nodes = 0;
  double bound = 0.0;
  double incumbent = 0.0;  // +inf (minimization) until found
};

/// Objective and bound are reported in the problem's own sense.
struct MilpSolution {
  MilpStatus status = MilpStatus::infeasible;
  bool has_incumbent = false;
  std::vector<double> x;
  double objective = 0.0;
  double bound = 0.0;
  double abs_gap = 0.0;
  double rel_gap = 0.0;
  long nodes = 0;
  std::vector<BoundTrace> trace;  // minimization sense
};

/// LP-based branch-and-bound over the binary variables: depth-first until
/// the first incumbent, then best bound; most-fractional branching with
/// lowest-index ties. Deterministic for any thread count.
MilpSolution solve_milp(const ProblemIR& ir, const MilpOptions& options = {});

}  // namespace mlembed
