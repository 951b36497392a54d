#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlembed/hybrid.hpp"
#include "mlembed/lp.hpp"

namespace mlembed {

enum class VarType { continuous, binary };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  VarType type = VarType::continuous;
};

/// Full-space formulation: explicit variables, linear rows, optional
/// nonlinear graph rows, and a linear or graph objective.
struct ProblemIR {
  std::vector<Variable> variables;
  std::vector<LinearConstraint> linear;
  std::vector<GraphConstraint> nonlinear;
  std::vector<LinearTerm> objective;          // used when objective_graph is empty
  std::optional<ExprGraph> objective_graph;
  double objective_constant = 0.0;
  bool maximize = false;

  // Bookkeeping for fidelity checks and reports.
  std::vector<int> input_vars;
  int output_var = -1;
  std::vector<std::string> warnings;

  int add_variable(std::string name, double lower, double upper, VarType type = VarType::continuous);
  int add_binary(std::string name) { return add_variable(std::move(name), 0.0, 1.0, VarType::binary); }
  void add_row(std::vector<LinearTerm> terms, RowSense sense, double rhs);

  std::size_t num_vars() const { return variables.size(); }
  std::size_t num_binaries() const;
  bool is_linear() const { return nonlinear.empty() && !objective_graph; }
  Box box() const;

  /// Objective value in the problem's own sense.
  double objective_value(std::span<const double> x) const;
  /// Largest violation of bounds, integrality, linear and nonlinear rows.
  double max_violation(std::span<const double> x, double int_tol = 1e-6) const;

  void validate() const;
};

/// LP relaxation as a minimization (maximize problems are negated).
LpModel to_lp_model(const ProblemIR& ir);

/// Integrality relaxed.
LpSolution solve_lp(const ProblemIR& ir, const LpOptions& options = {});

/// LP-file text: Minimize/Maximize, Subject To, Bounds, Binaries, End.
/// Throws ErrorKind::unsupported when nonlinear content is present.
std::string export_lp(const ProblemIR& ir);

/// Reduced form for the spatial branch-and-bound (minimization).
HybridProblem to_hybrid(const ProblemIR& ir);

/// Solves for every non-fixed continuous variable given values for `fixed`
/// vars, using the equality rows and equality graphs (square system, Newton
/// with a dense Jacobian). Returns the full point; throws ErrorKind::numeric
/// if Newton does not converge to `tol`.
std::vector<double> complete_equalities(const ProblemIR& ir, std::span<const int> fixed,
                                        std::span<const double> values, double tol = 1e-12);

}  // namespace mlembed
