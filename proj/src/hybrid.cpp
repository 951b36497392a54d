#include "mlembed/hybrid.hpp"

#include <algorithm>
#include <cmath>

#include "mlembed/error.hpp"

namespace mlembed {

double GraphConstraint::violation(std::span<const double> x) const {
  const double v = graph.value(x) - rhs;
  switch (sense) {
    case RowSense::le: return std::max(v, 0.0);
    case RowSense::ge: return std::max(-v, 0.0);
    case RowSense::eq: return std::abs(v);
  }
  return 0.0;
}

void HybridProblem::validate() const {
  box.validate("problem box", true);
  if (!box.is_finite()) fail(ErrorKind::validation, "problem box must be finite");
  auto check_graph = [&](const ExprGraph& g, const char* what) {
    if (g.num_vars() != box.size()) {
      fail(ErrorKind::dimension, std::string(what) + " graph variable count differs from the box");
    }
    if (g.outputs().empty()) fail(ErrorKind::validation, std::string(what) + " graph has no output");
  };
  check_graph(objective, "objective");
  for (const auto& c : constraints) {
    check_graph(c.graph, "constraint");
    if (!(c.tolerance >= 0.0)) fail(ErrorKind::validation, "constraint tolerance must be >= 0");
  }
  for (const auto& row : linear) {
    for (const auto& t : row.terms) {
      if (t.var < 0 || static_cast<std::size_t>(t.var) >= box.size()) {
        fail(ErrorKind::dimension, "linear row references an unknown variable");
      }
      if (!std::isfinite(t.coef)) fail(ErrorKind::validation, "non-finite linear coefficient");
    }
  }
}

double HybridProblem::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (const auto& c : constraints) worst = std::max(worst, c.violation(x));
  for (const auto& row : linear) worst = std::max(worst, row.violation(x));
  return worst;
}

}  // namespace mlembed
