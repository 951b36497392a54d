#include "mlembed/relax_graph.hpp"

#include <algorithm>
#include <cmath>

#include "mlembed/error.hpp"

namespace mlembed {

namespace {

void tighten(McValue& v, const Box& box, std::span<const double> point) {
  double lo = v.cv;
  double hi = v.cc;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const double dl = box.lower[i] - point[i];
    const double du = box.upper[i] - point[i];
    lo += std::min(v.cvsub[i] * dl, v.cvsub[i] * du);
    hi += std::max(v.ccsub[i] * dl, v.ccsub[i] * du);
  }
  // Absorb rounding in the sums above.
  lo -= 1e-12 * (1.0 + std::abs(lo));
  hi += 1e-12 * (1.0 + std::abs(hi));
  Interval r = v.range;
  if (std::isfinite(lo) && lo > r.lo) r.lo = std::min(lo, r.hi);
  if (std::isfinite(hi) && hi < r.hi) r.hi = std::max(hi, r.lo);
  v.range = r;
  if (v.cv < r.lo) {
    v.cv = r.lo;
    std::fill(v.cvsub.begin(), v.cvsub.end(), 0.0);
  }
  if (v.cc > r.hi) {
    v.cc = r.hi;
    std::fill(v.ccsub.begin(), v.ccsub.end(), 0.0);
  }
}

}  // namespace

std::vector<Interval> propagate_intervals(const ExprGraph& graph, const Box& box) {
  if (box.size() != graph.num_vars()) fail(ErrorKind::dimension, "propagate_intervals: box dimension");
  std::vector<Interval> out;
  out.reserve(graph.size());
  for (const auto& n : graph.nodes()) out.push_back(interval_apply(n, out, box));
  return out;
}

std::vector<McValue> propagate_mccormick(const ExprGraph& graph, const Box& box,
                                         std::span<const double> point,
                                         const RelaxOptions& options) {
  const std::size_t n = graph.num_vars();
  if (box.size() != n || point.size() != n) {
    fail(ErrorKind::dimension, "propagate_mccormick: box/point dimension");
  }
  std::vector<McValue> mc;
  std::vector<Interval> iv;
  mc.reserve(graph.size());
  iv.reserve(graph.size());
  for (const auto& node : graph.nodes()) {
    iv.push_back(interval_apply(node, iv, box));
    if (node.op == Op::variable) {
      const auto i = static_cast<std::size_t>(node.var);
      mc.push_back(McValue::variable(point[i], i, iv.back(), n));
    } else if (node.op == Op::constant) {
      mc.push_back(McValue::constant(node.value, n));
    } else {
      mc.push_back(mc_apply(node, mc, iv.back(), options.tailored_kernel));
      if (options.subgradient_tightening) {
        tighten(mc.back(), box, point);
        iv.back() = mc.back().range;
      }
    }
  }
  return mc;
}

}  // namespace mlembed
