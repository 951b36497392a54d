#pragma once

#include <span>
#include <vector>

#include "mlembed/expr_graph.hpp"
#include "mlembed/interval.hpp"
#include "mlembed/mccormick.hpp"

namespace mlembed {

struct RelaxOptions {
  // Use the Gaussian-factor envelopes on se_kernel nodes.
  bool tailored_kernel = true;
  // Narrow each node's interval to the range of its affine under/over
  // estimators over the box before it feeds later nodes.
  bool subgradient_tightening = true;
};

/// Interval of every node over `box` (indexed by node id).
std::vector<Interval> propagate_intervals(const ExprGraph& graph, const Box& box);

/// McCormick values of every node over `box`, linearized at `point`.
std::vector<McValue> propagate_mccormick(const ExprGraph& graph, const Box& box,
                                         std::span<const double> point,
                                         const RelaxOptions& options = {});

}  // namespace mlembed
