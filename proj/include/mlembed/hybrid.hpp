#pragma once

#include <vector>

#include "mlembed/expr_graph.hpp"
#include "mlembed/lp.hpp"

namespace mlembed {

/// graph.outputs()[0] (sense) rhs, verified to within `tolerance`.
struct GraphConstraint {
  ExprGraph graph;
  RowSense sense = RowSense::eq;
  double rhs = 0.0;
  double tolerance = 1e-6;

  double violation(std::span<const double> x) const;
};

/// Reduced-space problem: minimize objective(x) over the box subject to
/// graph constraints and plain linear rows. All graphs share the box's
/// variable space.
struct HybridProblem {
  Box box;
  ExprGraph objective;
  std::vector<GraphConstraint> constraints;
  std::vector<LinearConstraint> linear;

  std::size_t num_vars() const { return box.size(); }
  /// Throws ErrorKind::validation / dimension on inconsistent parts.
  void validate() const;
  /// Largest constraint violation at x (0 when feasible).
  double max_violation(std::span<const double> x) const;
};

}  // namespace mlembed
