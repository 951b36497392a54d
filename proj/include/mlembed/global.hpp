#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mlembed/hybrid.hpp"
#include "mlembed/relax_graph.hpp"

namespace mlembed {

enum class GlobalStatus { converged, gap_limit, node_limit, infeasible };

const char* to_string(GlobalStatus status);

struct GlobalOptions {
  double abs_tol = 1e-5;
  double rel_tol = 1e-4;
  long node_limit = 100000;
  double feas_tol = 1e-6;
  int threads = 1;
  // Nodes processed per round; fixed so results do not depend on `threads`.
  int batch = 4;
  bool local_search = true;
  bool record_trace = false;
  RelaxOptions relax;
};

struct GlobalTrace {
  long nodes = 0;
  double lower_bound = 0.0;
  double incumbent = 0.0;
};

struct GlobalSolution {
  GlobalStatus status = GlobalStatus::infeasible;
  bool has_incumbent = false;
  std::vector<double> x;
  double objective = 0.0;
  double lower_bound = 0.0;
  double abs_gap = 0.0;
  double rel_gap = 0.0;
  long nodes = 0;
  std::vector<GlobalTrace> trace;
};

/// Spatial branch-and-bound for min objective(x) over the problem box.
GlobalSolution solve_global(const HybridProblem& problem, const GlobalOptions& options = {});

/// Projected gradient descent with Armijo backtracking (c = 1e-4, halving);
/// each step moves at most a tenth of the widest box side.
/// Returns the best visited box point; never worse than `start` (clamped).
std::vector<double> local_search(const ExprGraph& graph, const Box& box, std::span<const double> start,
                                 int max_iterations = 200, std::size_t output = 0);

struct GridResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluated = 0;
};

/// Exhaustive tensor grid with `points` per dimension (dimension <= 3). The
/// first grid point (last coordinate varying fastest) wins ties.
GridResult grid_oracle(const ExprGraph& graph, const Box& box, std::size_t points, std::size_t output = 0);

/// Same scan over an arbitrary function; points whose evaluation throws
/// mlembed::Error or returns a non-finite value are skipped.
GridResult grid_oracle(const std::function<double(std::span<const double>)>& f, const Box& box,
                       std::size_t points);

/// Point `index` (>= 1) of the Halton sequence in [0,1)^dim.
std::vector<double> halton(std::size_t index, std::size_t dim);

}  // namespace mlembed
