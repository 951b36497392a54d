#include "mlembed/problem.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "mlembed/error.hpp"

namespace mlembed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  if (v == kInf) return "+inf";
  if (v == -kInf) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string var_name(int j) { return "x" + std::to_string(j); }

void write_terms(std::ostringstream& os, const std::vector<LinearTerm>& terms) {
  bool first = true;
  for (const auto& t : terms) {
    const double c = t.coef;
    if (first) {
      if (c == 1.0) {
        os << var_name(t.var);
      } else if (c == -1.0) {
        os << "-" << var_name(t.var);
      } else {
        os << num(c) << " " << var_name(t.var);
      }
      first = false;
      continue;
    }
    const double m = std::abs(c);
    os << (c < 0.0 ? " - " : " + ");
    if (m != 1.0) os << num(m) << " ";
    os << var_name(t.var);
  }
  if (first) os << "0 x0";
}

// Merges duplicate variables within a row and drops zero coefficients.
std::vector<LinearTerm> canonical(const std::vector<LinearTerm>& terms) {
  std::vector<LinearTerm> out;
  for (const auto& t : terms) {
    auto it = std::find_if(out.begin(), out.end(), [&](const LinearTerm& o) { return o.var == t.var; });
    if (it == out.end()) {
      out.push_back(t);
    } else {
      it->coef += t.coef;
    }
  }
  std::erase_if(out, [](const LinearTerm& t) { return t.coef == 0.0; });
  return out;
}

std::span<const double> prefix(std::span<const double> x, const ExprGraph& g) {
  return x.subspan(0, g.num_vars());
}

ExprGraph widen_to(const ExprGraph& g, const Box& box) {
  return g.num_vars() == box.size() ? ExprGraph(g) : g.widened(box);
}

}  // namespace

int ProblemIR::add_variable(std::string name, double lower, double upper, VarType type) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    fail(ErrorKind::validation, "variable " + name + ": invalid bounds [" + num(lower) + ", " + num(upper) + "]");
  }
  variables.push_back(Variable{std::move(name), lower, upper, type});
  return static_cast<int>(variables.size() - 1);
}

void ProblemIR::add_row(std::vector<LinearTerm> terms, RowSense sense, double rhs) {
  linear.push_back(LinearConstraint{canonical(terms), sense, rhs});
}

std::size_t ProblemIR::num_binaries() const {
  return static_cast<std::size_t>(std::count_if(variables.begin(), variables.end(),
                                                [](const Variable& v) { return v.type == VarType::binary; }));
}

Box ProblemIR::box() const {
  Box b;
  for (const auto& v : variables) {
    b.lower.push_back(v.lower);
    b.upper.push_back(v.upper);
  }
  return b;
}

double ProblemIR::objective_value(std::span<const double> x) const {
  if (objective_graph) return objective_graph->value(prefix(x, *objective_graph)) + objective_constant;
  double s = objective_constant;
  for (const auto& t : objective) s += t.coef * x[static_cast<std::size_t>(t.var)];
  return s;
}

double ProblemIR::max_violation(std::span<const double> x, double int_tol) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < variables.size(); ++j) {
    const auto& v = variables[j];
    worst = std::max({worst, v.lower - x[j], x[j] - v.upper});
    if (v.type == VarType::binary) {
      const double frac = std::abs(x[j] - std::round(x[j]));
      if (frac > int_tol) worst = std::max(worst, frac);
    }
  }
  for (const auto& row : linear) worst = std::max(worst, row.violation(x));
  for (const auto& c : nonlinear) worst = std::max(worst, c.violation(prefix(x, c.graph)));
  return worst;
}

void ProblemIR::validate() const {
  const auto n = static_cast<int>(variables.size());
  for (const auto& v : variables) {
    if (v.lower > v.upper) fail(ErrorKind::validation, "variable " + v.name + " has lower > upper");
    if (v.type == VarType::binary && (v.lower < 0.0 || v.upper > 1.0)) {
      fail(ErrorKind::validation, "binary variable " + v.name + " must have bounds within [0,1]");
    }
  }
  auto check_terms = [&](const std::vector<LinearTerm>& terms) {
    for (const auto& t : terms) {
      if (t.var < 0 || t.var >= n) fail(ErrorKind::validation, "linear term references an unknown variable");
      if (!std::isfinite(t.coef)) fail(ErrorKind::validation, "non-finite linear coefficient");
    }
  };
  for (const auto& row : linear) {
    check_terms(row.terms);
    if (!std::isfinite(row.rhs)) fail(ErrorKind::validation, "non-finite right-hand side");
  }
  check_terms(objective);
  for (const auto& c : nonlinear) {
    if (c.graph.num_vars() > variables.size()) {
      fail(ErrorKind::validation, "nonlinear row references more variables than the problem has");
    }
  }
  if (objective_graph && objective_graph->num_vars() > variables.size()) {
    fail(ErrorKind::validation, "objective graph references more variables than the problem has");
  }
}

LpModel to_lp_model(const ProblemIR& ir) {
  if (!ir.is_linear()) fail(ErrorKind::unsupported, "LP relaxation requires a linear problem");
  const auto n = static_cast<Eigen::Index>(ir.num_vars());
  const auto m = static_cast<Eigen::Index>(ir.linear.size());
  LpModel lp;
  lp.A = Eigen::MatrixXd::Zero(m, n);
  lp.rhs.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = ir.linear[static_cast<std::size_t>(i)];
    for (const auto& t : row.terms) lp.A(i, t.var) += t.coef;
    lp.sense.push_back(row.sense);
    lp.rhs[i] = row.rhs;
  }
  const double sign = ir.maximize ? -1.0 : 1.0;
  lp.cost = Eigen::VectorXd::Zero(n);
  for (const auto& t : ir.objective) lp.cost[t.var] += sign * t.coef;
  lp.objective_offset = sign * ir.objective_constant;
  for (const auto& v : ir.variables) {
    lp.lower.push_back(v.lower);
    lp.upper.push_back(v.upper);
  }
  return lp;
}

LpSolution solve_lp(const ProblemIR& ir, const LpOptions& options) {
  LpSolution s = solve_lp(to_lp_model(ir), options);
  if (ir.maximize) s.objective = -s.objective;
  return s;
}

std::string export_lp(const ProblemIR& ir) {
  if (!ir.is_linear()) {
    fail(ErrorKind::unsupported, "LP export requires a linear problem; nonlinear rows or objective present");
  }
  std::ostringstream os;
  os << (ir.maximize ? "Maximize" : "Minimize") << "\n obj: ";
  write_terms(os, canonical(ir.objective));
  if (ir.objective_constant != 0.0) {
    os << (ir.objective_constant < 0.0 ? " - " : " + ") << num(std::abs(ir.objective_constant));
  }
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < ir.linear.size(); ++i) {
    const auto& row = ir.linear[i];
    os << " c" << i << ": ";
    write_terms(os, canonical(row.terms));
    os << (row.sense == RowSense::le ? " <= " : row.sense == RowSense::ge ? " >= " : " = ") << num(row.rhs)
       << "\n";
  }
  os << "Bounds\n";
  for (std::size_t j = 0; j < ir.variables.size(); ++j) {
    const auto& v = ir.variables[j];
    if (v.lower == -kInf && v.upper == kInf) {
      os << " " << var_name(static_cast<int>(j)) << " free\n";
    } else {
      os << " " << num(v.lower) << " <= " << var_name(static_cast<int>(j)) << " <= " << num(v.upper) << "\n";
    }
  }
  if (ir.num_binaries() > 0) {
    os << "Binaries\n";
    for (std::size_t j = 0; j < ir.variables.size(); ++j) {
      if (ir.variables[j].type == VarType::binary) os << " " << var_name(static_cast<int>(j)) << "\n";
    }
  }
  os << "End";
  return os.str();
}

HybridProblem to_hybrid(const ProblemIR& ir) {
  ir.validate();
  if (ir.num_binaries() > 0) {
    fail(ErrorKind::unsupported, "spatial branch-and-bound handles continuous variables only");
  }
  HybridProblem p;
  p.box = ir.box();
  if (!p.box.is_finite()) fail(ErrorKind::validation, "full-space variables need finite bounds");
  ExprGraph obj;
  if (ir.objective_graph) {
    obj = widen_to(*ir.objective_graph, p.box);
    Expr out = obj.outputs().at(0);
    if (ir.objective_constant != 0.0) out = obj.scale(out, 1.0, ir.objective_constant);
    if (ir.maximize) out = obj.negate(out);
    obj.set_outputs({out});
  } else {
    obj = ExprGraph(p.box.size(), p.box);
    std::vector<Expr> terms;
    std::vector<double> w;
    for (const auto& t : canonical(ir.objective)) {
      terms.push_back(obj.variable(static_cast<std::size_t>(t.var)));
      w.push_back(ir.maximize ? -t.coef : t.coef);
    }
    obj.add_output(obj.affine(terms, w, ir.maximize ? -ir.objective_constant : ir.objective_constant));
  }
  p.objective = std::move(obj);
  for (const auto& c : ir.nonlinear) {
    GraphConstraint gc = c;
    gc.graph = widen_to(c.graph, p.box);
    p.constraints.push_back(std::move(gc));
  }
  p.linear = ir.linear;
  return p;
}

std::vector<double> complete_equalities(const ProblemIR& ir, std::span<const int> fixed,
                                        std::span<const double> values, double tol) {
  const std::size_t n = ir.num_vars();
  if (fixed.size() != values.size()) fail(ErrorKind::dimension, "complete_equalities: fixed/values length");
  std::vector<double> x(n, 0.0);
  std::vector<int> pos(n, -1);
  std::vector<bool> is_fixed(n, false);
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    is_fixed[static_cast<std::size_t>(fixed[k])] = true;
    x[static_cast<std::size_t>(fixed[k])] = values[k];
  }
  std::vector<std::size_t> unknowns;
  for (std::size_t j = 0; j < n; ++j) {
    if (is_fixed[j]) continue;
    const auto& v = ir.variables[j];
    if (std::isfinite(v.lower) && std::isfinite(v.upper)) {
      x[j] = 0.5 * (v.lower + v.upper);
    } else {
      x[j] = std::isfinite(v.lower) ? v.lower : (std::isfinite(v.upper) ? v.upper : 0.0);
    }
    pos[j] = static_cast<int>(unknowns.size());
    unknowns.push_back(j);
  }
  std::vector<const LinearConstraint*> rows;
  for (const auto& r : ir.linear) {
    if (r.sense == RowSense::eq) rows.push_back(&r);
  }
  std::vector<const GraphConstraint*> graphs;
  for (const auto& c : ir.nonlinear) {
    if (c.sense == RowSense::eq) graphs.push_back(&c);
  }
  const std::size_t m = rows.size() + graphs.size();
  if (m != unknowns.size()) {
    fail(ErrorKind::dimension, "complete_equalities: " + std::to_string(m) + " equations for " +
                                   std::to_string(unknowns.size()) + " unknowns");
  }
  const auto um = static_cast<Eigen::Index>(m);
  auto residual = [&](const std::vector<double>& pt, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(um);
    if (J) J->setZero(um, um);
    Eigen::Index i = 0;
    for (const auto* row : rows) {
      r[i] = row->activity(pt) - row->rhs;
      if (J) {
        for (const auto& t : row->terms) {
          const int p = pos[static_cast<std::size_t>(t.var)];
          if (p >= 0) (*J)(i, p) += t.coef;
        }
      }
      ++i;
    }
    std::vector<double> grad;
    for (const auto* c : graphs) {
      const auto sub = std::span<const double>(pt).subspan(0, c->graph.num_vars());
      if (J) {
        r[i] = c->graph.value_and_gradient(sub, grad) - c->rhs;
        for (std::size_t j = 0; j < grad.size(); ++j) {
          if (pos[j] >= 0) (*J)(i, pos[j]) += grad[j];
        }
      } else {
        r[i] = c->graph.value(sub) - c->rhs;
      }
      ++i;
    }
  };
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  residual(x, r, &J);
  double norm = m ? r.lpNorm<Eigen::Infinity>() : 0.0;
  for (int it = 0; it < 100 && norm > tol; ++it) {
    const Eigen::VectorXd step = J.fullPivLu().solve(-r);
    double t = 1.0;
    std::vector<double> trial = x;
    Eigen::VectorXd rt;
    for (int ls = 0; ls < 30; ++ls) {
      for (std::size_t k = 0; k < unknowns.size(); ++k) {
        trial[unknowns[k]] = x[unknowns[k]] + t * step[static_cast<Eigen::Index>(k)];
      }
      bool ok = true;
      try {
        residual(trial, rt, nullptr);
      } catch (const Error&) {
        ok = false;
      }
      if (ok && rt.lpNorm<Eigen::Infinity>() < norm) break;
      t *= 0.5;
    }
    x = trial;
    residual(x, r, &J);
    const double next = r.lpNorm<Eigen::Infinity>();
    if (!(next < norm) && next > tol) {
      norm = next;
      break;
    }
    norm = next;
  }
  if (!(norm <= tol)) {
    fail(ErrorKind::numeric, "complete_equalities: Newton stalled at residual " + num(norm));
  }
  return x;
}

}  // namespace mlembed
